#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "plumecal/doe.hpp"
#include "plumecal/gp.hpp"

namespace plumecal {

/// Maps rows of physical points (N x m) to N outputs.
using BatchFunction = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
using PointFunction = std::function<double(std::span<const double>)>;

struct SobolResult {
    std::vector<double> total;  // one per box axis, raw (may dip below 0)
    double variance = 0;        // pooled output variance over A and B
    bool degenerate = false;    // zero output variance: totals reported as 0
};

/// Jansen total-effect estimator on a randomly shifted Sobol' sequence.
/// Uses N (m + 2) evaluations.
SobolResult sobol_total_indices(const BatchFunction& f, const ParameterBox& box, std::size_t N, std::uint64_t seed);
SobolResult sobol_total_indices(const PointFunction& f, const ParameterBox& box, std::size_t N, std::uint64_t seed);

/// Linear-interpolation sample quantile (type 7).
double quantile_type7(std::vector<double> values, double p);

struct BoxplotStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double iqr = 0;
    double whisker_low = 0;   // max{min S, q1 - 1.5 IQR}
    double whisker_high = 0;  // min{max S, q3 + 1.5 IQR}
};

BoxplotStats boxplot_stats(std::span<const double> values);

struct ScreeningOptions {
    std::vector<KernelFamily> families{std::begin(kAllKernelFamilies), std::end(kAllKernelFamilies)};
    std::size_t base_samples = 4096;
    double threshold = 0.1;
    /// Keep `coupled_to_keep.second` whenever `coupled_to_keep.first` is kept.
    bool keep_coupled = true;
    std::pair<std::string, std::string> coupled{"z0", "L"};
    FitOptions fit;
};

struct SensitivityRecord {
    std::size_t receptor = 0;
    std::string parameter;
    KernelFamily kernel = KernelFamily::squared_exponential;
    double total_index = 0;
};

struct ParameterVerdict {
    std::string name;
    double median_total = 0;  // over all receptor x kernel indices
    bool kept = true;
    bool kept_by_coupling = false;
};

struct ScreeningResult {
    std::vector<SensitivityRecord> records;
    /// stats[i][p]: boxplot over kernels for receptor i, parameter p.
    std::vector<std::vector<BoxplotStats>> stats;
    std::vector<ParameterVerdict> verdict;
    std::vector<std::string> warnings;
};

/// Sobol screening of maps w_i(theta). `values` is K x d: the output of
/// receptor i at design point k. One GP per (receptor, kernel) family
/// serves as the surrogate.
ScreeningResult screen_parameters(const DesignSet& design, const Eigen::MatrixXd& values,
                                  const ScreeningOptions& options, std::uint64_t seed);

}  // namespace plumecal
