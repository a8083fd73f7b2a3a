#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "plumecal/doe.hpp"
#include "plumecal/gp.hpp"

namespace plumecal {

// ---------------------------------------------------------------------------
// Priors and likelihood
// ---------------------------------------------------------------------------

/// Gamma(shape alpha, rate beta).
struct GammaParams {
    double alpha = 1;
    double beta = 1;

    double mode() const { return alpha > 1 ? (alpha - 1) / beta : 0.0; }
    double quantile(double p) const;
    double log_pdf(double x) const;  // -inf for x < 0
};

/// Shape and rate with mode q_eng and the `mass` quantile at tau q_eng.
/// Bisection on alpha with beta = (alpha - 1) / q_eng.
GammaParams gamma_from_mode_quantile(double q_eng, double tau, double mass = 0.99);

struct PriorSpec {
    ParameterBox theta_box;            // uniform bounds
    std::vector<double> q_eng;         // ton/yr
    std::vector<GammaParams> gammas;   // one per source
    double tau = 3;

    static PriorSpec build(ParameterBox theta_box, std::vector<double> q_eng, double tau);
    std::size_t theta_dimension() const { return theta_box.dimension(); }
    std::size_t source_count() const { return gammas.size(); }
};

/// Sum of uniform and gamma log densities; -inf outside the support.
double log_prior(const PriorSpec& prior, std::span<const double> theta, std::span<const double> q);

struct NoiseModel {
    double lambda = 1;  // variance of each measurement

    /// -(d/2) log(2 pi lambda).
    double log_normalization(std::size_t d) const;
};

/// Gaussian log likelihood of w given predictions `a * q`.
double log_likelihood(const Eigen::MatrixXd& a, std::span<const double> q, std::span<const double> w,
                      const NoiseModel& noise);

// ---------------------------------------------------------------------------
// Adaptive Metropolis-Hastings
// ---------------------------------------------------------------------------

struct AdaptiveMhParams {
    std::size_t N = 1000000;
    double beta = 0.05;
    double gamma1 = 0.01;
    double gamma2 = 2.38 * 2.38;
    double gamma3 = 0.1 * 0.1;
};

using LogDensity = std::function<double(std::span<const double>)>;

struct PosteriorChain {
    Eigen::MatrixXd states;             // N x dim, row 0 is the initial state
    std::vector<std::uint8_t> accepted;  // accepted[0] = 1 by convention
    std::vector<double> log_post;
    std::size_t nonfinite_proposals = 0;
    Eigen::MatrixXd final_covariance;    // running empirical covariance at the end

    std::size_t size() const { return std::size_t(states.rows()); }
    std::size_t dimension() const { return std::size_t(states.cols()); }
    double acceptance_rate() const;
};

/// Random-walk proposals, isotropic for the first 2 dim steps, then the
/// (1 - beta, beta) mixture of the adapted and isotropic Gaussians.
PosteriorChain adaptive_mh(const LogDensity& log_post, std::span<const double> init, const AdaptiveMhParams& params,
                           std::uint64_t seed);

struct ThinnedSamples {
    Eigen::MatrixXd samples;           // rows are retained states
    std::vector<std::size_t> indices;  // chain step of each row
    std::vector<double> log_post;
};

/// Drop the first floor(burn_in_fraction N) states, keep every thinning-th after.
ThinnedSamples postprocess_chain(const PosteriorChain& chain, double burn_in_fraction = 0.5,
                                 std::size_t thinning = 10);

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

enum class ModeEstimator { gamma_fit, kde };

/// Mode of a gamma fitted by maximum likelihood (method-of-moments start).
double gamma_fit_mode(std::span<const double> x);
GammaParams gamma_fit(std::span<const double> x);
/// Mode of a Gaussian KDE with Silverman's bandwidth.
double kde_mode(std::span<const double> x);

/// Smallest r with #{|x - x*| <= r} / n >= mass.
double credible_radius(std::span<const double> x, double x_star, double mass = 0.68);

struct InferenceSummary {
    std::vector<std::string> names;
    std::vector<double> point;      // marginal modes
    std::vector<double> mean;       // conditional mean
    std::vector<double> radius;     // credible radius about `point`
    std::vector<double> lower, upper;  // point -/+ radius clipped to the support
    Eigen::MatrixXd covariance;     // second moment about `point`
    double mass = 0.68;
};

struct CoordinateSpec {
    std::string name;
    ModeEstimator estimator = ModeEstimator::kde;
    double support_lower = -std::numeric_limits<double>::infinity();
    double support_upper = std::numeric_limits<double>::infinity();
};

InferenceSummary point_estimates(const Eigen::MatrixXd& samples, const std::vector<CoordinateSpec>& coords,
                                 double mass = 0.68);

// ---------------------------------------------------------------------------
// Inversion over an emulated source-receptor matrix
// ---------------------------------------------------------------------------

struct InversionProblem {
    const EmulatedMatrix* emulator = nullptr;  // entries in kg per (kg/s)
    std::vector<double> w;                     // kg
    PriorSpec prior;
    NoiseModel noise;
    double rate_unit = 1.0;                    // kg/s per unit of q
};

struct InversionResult {
    PosteriorChain chain;  // physical coordinates (theta, q)
    ThinnedSamples retained;
    InferenceSummary summary;
    std::vector<double> map;  // highest log posterior among retained samples
    std::vector<double> ml;   // highest log likelihood among retained samples
    std::vector<std::string> names;
};

/// Log posterior in physical coordinates (theta..., q...).
double log_posterior(const InversionProblem& problem, std::span<const double> x);

struct InversionOptions {
    AdaptiveMhParams mcmc;
    double burn_in_fraction = 0.5;
    std::size_t thinning = 10;
    double mass = 0.68;
    bool summarize = true;
};

/// Runs the sampler in normalized coordinates (theta on the unit box,
/// q / q_eng) and maps the chain back.
InversionResult run_inversion(const InversionProblem& problem, const InversionOptions& options, std::uint64_t seed);

}  // namespace plumecal
