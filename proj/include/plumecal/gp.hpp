#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plumecal/doe.hpp"

namespace plumecal {

enum class KernelFamily { exponential, squared_exponential, matern32, matern52 };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);  // throws ConfigError
inline constexpr KernelFamily kAllKernelFamilies[] = {KernelFamily::exponential, KernelFamily::squared_exponential,
                                                      KernelFamily::matern32, KernelFamily::matern52};

/// Isotropic stationary kernel; r1 is the signal variance, r2 the length
/// scale (for the squared exponential r2 multiplies s^2 / 2 directly).
struct Kernel {
    KernelFamily family = KernelFamily::squared_exponential;
    double r1 = 1.0;
    double r2 = 1.0;

    double operator()(double s) const;
};

double kernel_eval(const Kernel& kernel, double s);

struct FitOptions {
    // log10 search ranges; r1 relative to the sample variance of the values
    double log10_r1_min = -6, log10_r1_max = 2;
    double log10_r2_min = -3, log10_r2_max = 1;
    int grid_points = 25;
    int refine_rounds = 3;
    double shrink = 0.5;
    double jitter_start = 1e-10;  // relative to r1
    double jitter_max = 1e-4;
};

struct GpPrediction {
    double mean = 0;
    double variance = 0;
    bool outside_box = false;  // query left [0, 1]^m
};

/// Zero-noise GP interpolant with a constant prior mean (the training
/// average). Inputs are unit-cube coordinates.
class GaussianProcessEmulator {
public:
    /// Maximum-likelihood (r1, r2) by log-grid search plus coordinate
    /// refinement. Deterministic. Throws NumericalError when no candidate
    /// factorizes even with maximum jitter.
    static GaussianProcessEmulator fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                                       KernelFamily family, const FitOptions& options = {});

    /// Condition on the data with fixed hyperparameters. `jitter` is
    /// relative to r1; it escalates x10 up to options.jitter_max if needed.
    static GaussianProcessEmulator condition(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                                             const Kernel& kernel, double jitter = 1e-10,
                                             const FitOptions& options = {});

    GpPrediction predict(std::span<const double> x) const;
    double predict_mean(std::span<const double> x) const;
    /// Mean from precomputed distances to every design point.
    double mean_from_distances(std::span<const double> distances) const;

    const Kernel& kernel() const { return kernel_; }
    double jitter() const { return jitter_; }
    double mean_offset() const { return offset_; }
    double log_marginal_likelihood() const { return lml_; }
    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::VectorXd& values() const { return values_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    /// Lower-triangular Cholesky factor of the jittered Gram matrix.
    const Eigen::MatrixXd& factor() const { return chol_; }

private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd values_;
    Kernel kernel_;
    double jitter_ = 0;
    double offset_ = 0;
    double lml_ = 0;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd weights_;
};

/// Pairwise Euclidean distances between rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);

/// Log marginal likelihood of centred values under kernel + jitter·r1·I;
/// nullopt when the Cholesky factorization fails.
std::optional<double> log_marginal_likelihood(const Eigen::MatrixXd& distances, const Eigen::VectorXd& centred,
                                              const Kernel& kernel, double jitter);

struct LoocvRecord {
    std::size_t index = 0;
    double truth = 0;
    double mean = 0;
    double sd = 0;
    bool ok = true;
    std::string message;
};

/// Leave-one-out cross validation; each record comes from a fit on K - 1 points.
std::vector<LoocvRecord> loocv(const Eigen::MatrixXd& design, const Eigen::VectorXd& values, KernelFamily family,
                               const FitOptions& options = {});

/// 1 - SS_res / SS_tot over the successful records.
double loocv_r_squared(const std::vector<LoocvRecord>& records);

/// Grid of GP emulators, one per source-receptor entry, over a shared design.
class EmulatedMatrix {
public:
    struct Entry {
        GaussianProcessEmulator gp;
        bool fallback = false;  // fit failed: nearest design point value is used
        Eigen::VectorXd values;  // training values at the design points
    };

    /// `snapshots[k]` is the d x n matrix at design point k.
    static EmulatedMatrix build(const DesignSet& design, const std::vector<Eigen::MatrixXd>& snapshots,
                                KernelFamily family = KernelFamily::squared_exponential,
                                const FitOptions& options = {});

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const ParameterBox& box() const { return box_; }
    const Eigen::MatrixXd& design() const { return design_; }
    KernelFamily family() const { return family_; }
    const Entry& entry(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Emulated matrix at a physical parameter point; negative entries clamp to 0.
    Eigen::MatrixXd mean(std::span<const double> theta) const;
    /// Same, plus the total magnitude removed by the clamp.
    Eigen::MatrixXd mean(std::span<const double> theta, double& clamped) const;
    /// Predictive variances per entry (no clamping).
    Eigen::MatrixXd variance(std::span<const double> theta) const;

    void save_json(const std::filesystem::path& path) const;
    static EmulatedMatrix load_json(const std::filesystem::path& path);

private:
    ParameterBox box_;
    Eigen::MatrixXd design_;
    std::size_t rows_ = 0, cols_ = 0;
    KernelFamily family_ = KernelFamily::squared_exponential;
    std::vector<Entry> entries_;
    std::vector<std::string> warnings_;
};

}  // namespace plumecal
