#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plumecal/bayes.hpp"

namespace plumecal {

struct JOptions {
    double delta = 0.5;  // weight of the prior-misfit term
    InversionOptions inversion{AdaptiveMhParams{100000}, 0.5, 10, 0.68, false};
    std::size_t batches = 20;  // batch means for the standard error
};

struct JEstimate {
    double lambda = 0;
    double value = 0;
    double stderr_ = 0;
    bool ok = true;
    std::string message;
};

/// Posterior expectation of (1 - delta)|A q - w| + delta |q - q_eng|
/// under noise variance lambda, from a fresh chain. delta = 1/2 gives J.
JEstimate j_functional(double lambda, const InversionProblem& problem, const JOptions& options, std::uint64_t seed);

struct LambdaCalibration {
    double lambda_star = 0;
    bool at_boundary = false;
    std::vector<JEstimate> evaluations;
    std::vector<double> curve_lambda;  // 1000-point log grid over the candidate span
    std::vector<double> curve_j;       // GP mean on that grid
    Kernel kernel;
};

/// Squared-exponential GP through (log10 lambda, J), minimized on the grid.
LambdaCalibration calibrate_lambda(std::span<const double> candidates, const InversionProblem& problem,
                                   const JOptions& options, std::uint64_t seed);

/// Same, from precomputed evaluations (failed ones are skipped).
LambdaCalibration calibrate_lambda(std::vector<JEstimate> evaluations);

/// RMS(w) / sqrt(lambda).
double snr(std::span<const double> w, double lambda);

/// `count` points log-spaced over [lo, hi].
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

}  // namespace plumecal
