#include <cmath>

#include "plumecal/bayes.hpp"
#include "plumecal/errors.hpp"

namespace plumecal {

double log_posterior(const InversionProblem& problem, std::span<const double> x)
{
    const std::size_t m = problem.prior.theta_dimension();
    const std::size_t n = problem.prior.source_count();
    PLUMECAL_REQUIRE(x.size() == m + n, "log_posterior: state has the wrong dimension");
    const auto theta = x.first(m);
    const auto q = x.subspan(m);
    const double lp = log_prior(problem.prior, theta, q);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    const Eigen::MatrixXd a = problem.emulator->mean(theta) * problem.rate_unit;
    return lp + log_likelihood(a, q, problem.w, problem.noise);
}

InversionResult run_inversion(const InversionProblem& problem, const InversionOptions& options, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(problem.emulator != nullptr, "run_inversion: no emulator");
    const std::size_t m = problem.prior.theta_dimension();
    const std::size_t n = problem.prior.source_count();
    PLUMECAL_REQUIRE(problem.emulator->box().dimension() == m, "run_inversion: emulator and prior disagree on theta");
    PLUMECAL_REQUIRE(problem.emulator->rows() == problem.w.size(), "run_inversion: measurement count mismatch");
    PLUMECAL_REQUIRE(problem.emulator->cols() == n, "run_inversion: source count mismatch");
    const std::size_t dim = m + n;

    // affine map from sampler coordinates to physical ones
    std::vector<double> offset(dim, 0.0), scale(dim, 1.0);
    for (std::size_t k = 0; k < m; ++k) {
        offset[k] = problem.prior.theta_box[k].lower;
        scale[k] = problem.prior.theta_box[k].upper - problem.prior.theta_box[k].lower;
    }
    for (std::size_t j = 0; j < n; ++j) scale[m + j] = problem.prior.q_eng[j];

    std::vector<double> phys(dim);
    const LogDensity target = [&](std::span<const double> u) {
        for (std::size_t k = 0; k < dim; ++k) phys[k] = offset[k] + scale[k] * u[k];
        return log_posterior(problem, phys);
    };
    std::vector<double> init(dim, 1.0);
    for (std::size_t k = 0; k < m; ++k) init[k] = 0.5;

    InversionResult out;
    out.chain = adaptive_mh(target, init, options.mcmc, seed);
    for (std::size_t k = 0; k < dim; ++k) {
        out.chain.states.col(Eigen::Index(k)).array() =
            offset[k] + scale[k] * out.chain.states.col(Eigen::Index(k)).array();
        out.chain.final_covariance.row(Eigen::Index(k)) *= scale[k];
        out.chain.final_covariance.col(Eigen::Index(k)) *= scale[k];
    }
    out.retained = postprocess_chain(out.chain, options.burn_in_fraction, options.thinning);

    for (std::size_t k = 0; k < m; ++k) out.names.push_back(problem.prior.theta_box[k].name);
    for (std::size_t j = 0; j < n; ++j) out.names.push_back("q" + std::to_string(j + 1));

    const auto& S = out.retained.samples;
    double best_post = -std::numeric_limits<double>::infinity(), best_like = best_post;
    for (Eigen::Index r = 0; r < S.rows(); ++r) {
        const Eigen::VectorXd row = S.row(r).transpose();
        const std::span<const double> x(row.data(), dim);
        const double lpost = out.retained.log_post[std::size_t(r)];
        const double llike = lpost - log_prior(problem.prior, x.first(m), x.subspan(m));
        if (lpost > best_post) {
            best_post = lpost;
            out.map.assign(row.data(), row.data() + dim);
        }
        if (llike > best_like) {
            best_like = llike;
            out.ml.assign(row.data(), row.data() + dim);
        }
    }

    if (options.summarize) {
        std::vector<CoordinateSpec> coords;
        for (std::size_t k = 0; k < m; ++k)
            coords.push_back({out.names[k], ModeEstimator::kde, problem.prior.theta_box[k].lower,
                              problem.prior.theta_box[k].upper});
        for (std::size_t j = 0; j < n; ++j)
            coords.push_back({out.names[m + j], ModeEstimator::gamma_fit, 0.0, std::numeric_limits<double>::infinity()});
        out.summary = point_estimates(S, coords, options.mass);
    }
    return out;
}

}  // namespace plumecal
