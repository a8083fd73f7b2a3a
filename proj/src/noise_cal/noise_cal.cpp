#include <algorithm>
#include <cmath>
#include <sstream>

#include "plumecal/errors.hpp"
#include "plumecal/noise_cal.hpp"
#include "plumecal/seeds.hpp"

namespace plumecal {

JEstimate j_functional(double lambda, const InversionProblem& problem, const JOptions& options, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(std::isfinite(lambda) && lambda > 0, "j_functional: lambda must be > 0");
    PLUMECAL_REQUIRE(options.delta >= 0 && options.delta <= 1, "j_functional: delta must be in [0, 1]");
    InversionProblem p = problem;
    p.noise.lambda = lambda;
    InversionOptions io = options.inversion;
    io.summarize = false;
    const InversionResult r = run_inversion(p, io, seed);

    const std::size_t m = p.prior.theta_dimension(), n = p.prior.source_count();
    const auto& S = r.retained.samples;
    std::vector<double> g(std::size_t(S.rows()));
    for (Eigen::Index k = 0; k < S.rows(); ++k) {
        const Eigen::VectorXd row = S.row(k).transpose();
        const std::span<const double> x(row.data(), m + n);
        const Eigen::VectorXd q = row.tail(Eigen::Index(n));
        const Eigen::VectorXd pred = p.emulator->mean(x.first(m)) * p.rate_unit * q;
        const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(p.w.data(), Eigen::Index(p.w.size()));
        const Eigen::VectorXd eng = Eigen::Map<const Eigen::VectorXd>(p.prior.q_eng.data(), Eigen::Index(n));
        g[std::size_t(k)] = (1 - options.delta) * (pred - w).norm() + options.delta * (q - eng).norm();
    }

    JEstimate out;
    out.lambda = lambda;
    double sum = 0;
    for (double v : g) sum += v;
    out.value = sum / double(g.size());
    // batch means; consecutive retained samples remain correlated
    const std::size_t B = std::min(options.batches, g.size());
    if (B >= 2) {
        const std::size_t len = g.size() / B;
        double ss = 0;
        for (std::size_t b = 0; b < B; ++b) {
            double bm = 0;
            for (std::size_t k = b * len; k < (b + 1) * len; ++k) bm += g[k];
            bm /= double(len);
            ss += (bm - out.value) * (bm - out.value);
        }
        out.stderr_ = std::sqrt(ss / double(B - 1) / double(B));
    }
    return out;
}

LambdaCalibration calibrate_lambda(std::vector<JEstimate> evaluations)
{
    std::vector<const JEstimate*> good;
    for (const auto& e : evaluations)
        if (e.ok && std::isfinite(e.value) && e.lambda > 0) good.push_back(&e);
    if (good.empty()) throw NumericalError("calibrate_lambda: every J evaluation failed");
    if (good.size() < 2) throw NumericalError("calibrate_lambda: need at least two successful J evaluations");

    double lo = std::log10(good.front()->lambda), hi = lo;
    for (const auto* e : good) {
        lo = std::min(lo, std::log10(e->lambda));
        hi = std::max(hi, std::log10(e->lambda));
    }
    PLUMECAL_REQUIRE(hi > lo, "calibrate_lambda: candidates must span a range");
    Eigen::MatrixXd x(Eigen::Index(good.size()), 1);
    Eigen::VectorXd y(Eigen::Index(good.size()));
    for (std::size_t k = 0; k < good.size(); ++k) {
        x(Eigen::Index(k), 0) = (std::log10(good[k]->lambda) - lo) / (hi - lo);
        y(Eigen::Index(k)) = good[k]->value;
    }
    const auto gp = GaussianProcessEmulator::fit(x, y, KernelFamily::squared_exponential);

    LambdaCalibration out;
    out.kernel = gp.kernel();
    const int G = 1000;
    std::size_t best = 0;
    for (int g = 0; g < G; ++g) {
        const double u = double(g) / (G - 1);
        const double mean = gp.predict_mean(std::span<const double>(&u, 1));
        out.curve_lambda.push_back(std::pow(10.0, lo + u * (hi - lo)));
        out.curve_j.push_back(mean);
        if (mean < out.curve_j[best]) best = std::size_t(g);
    }
    out.lambda_star = out.curve_lambda[best];
    out.at_boundary = best == 0 || best == std::size_t(G - 1);
    out.evaluations = std::move(evaluations);
    return out;
}

LambdaCalibration calibrate_lambda(std::span<const double> candidates, const InversionProblem& problem,
                                   const JOptions& options, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(candidates.size() >= 3, "calibrate_lambda: need at least 3 candidates");
    const auto [mn, mx] = std::minmax_element(candidates.begin(), candidates.end());
    PLUMECAL_REQUIRE(*mn > 0 && std::log10(*mx / *mn) >= 2.0 - 1e-12,
                     "calibrate_lambda: candidates must be > 0 and span at least two decades");
    std::vector<JEstimate> evals;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        try {
            evals.push_back(j_functional(candidates[k], problem, options,
                                         child_seed(seed, "lambda/" + std::to_string(k))));
        } catch (const NumericalError& e) {
            JEstimate f;
            f.lambda = candidates[k];
            f.ok = false;
            f.message = e.what();
            evals.push_back(f);
        }
    }
    return calibrate_lambda(std::move(evals));
}

double snr(std::span<const double> w, double lambda)
{
    PLUMECAL_REQUIRE(lambda > 0, "snr: lambda must be > 0");
    PLUMECAL_REQUIRE(!w.empty(), "snr: no measurements");
    double ss = 0;
    for (double v : w) ss += v * v;
    return std::sqrt(ss / double(w.size())) / std::sqrt(lambda);
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count)
{
    PLUMECAL_REQUIRE(lo > 0 && hi > lo && count >= 2, "log_spaced: need 0 < lo < hi and count >= 2");
    std::vector<double> v(count);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t k = 0; k < count; ++k) v[k] = std::pow(10.0, a + (b - a) * double(k) / double(count - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

}  // namespace plumecal
