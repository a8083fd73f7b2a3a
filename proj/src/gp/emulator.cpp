#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "plumecal/errors.hpp"
#include "plumecal/gp.hpp"

namespace plumecal {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points)
{
    const Eigen::Index K = points.rows();
    Eigen::MatrixXd d(K, K);
    for (Eigen::Index a = 0; a < K; ++a) {
        d(a, a) = 0.0;
        for (Eigen::Index b = a + 1; b < K; ++b) d(a, b) = d(b, a) = (points.row(a) - points.row(b)).norm();
    }
    return d;
}

namespace {

Eigen::MatrixXd gram(const Eigen::MatrixXd& distances, const Kernel& kernel, double jitter)
{
    const Eigen::Index K = distances.rows();
    Eigen::MatrixXd g(K, K);
    for (Eigen::Index a = 0; a < K; ++a) {
        g(a, a) = kernel(0.0) * (1.0 + jitter);
        for (Eigen::Index b = a + 1; b < K; ++b) g(a, b) = g(b, a) = kernel(distances(a, b));
    }
    return g;
}

double sample_variance(const Eigen::VectorXd& v)
{
    if (v.size() < 2) return 0.0;
    const double m = v.mean();
    return (v.array() - m).square().sum() / double(v.size());
}

}  // namespace

std::optional<double> log_marginal_likelihood(const Eigen::MatrixXd& distances, const Eigen::VectorXd& centred,
                                              const Kernel& kernel, double jitter)
{
    Eigen::LLT<Eigen::MatrixXd> llt(gram(distances, kernel, jitter));
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::MatrixXd& l = llt.matrixLLT();
    double log_det_half = 0;
    for (Eigen::Index k = 0; k < l.rows(); ++k) {
        if (!(l(k, k) > 0)) return std::nullopt;
        log_det_half += std::log(l(k, k));
    }
    const Eigen::VectorXd alpha = llt.solve(centred);
    const double quad = centred.dot(alpha);
    if (!std::isfinite(quad) || !std::isfinite(log_det_half)) return std::nullopt;
    return -0.5 * quad - log_det_half - 0.5 * double(centred.size()) * std::log(2.0 * std::numbers::pi);
}

GaussianProcessEmulator GaussianProcessEmulator::condition(const Eigen::MatrixXd& design,
                                                           const Eigen::VectorXd& values, const Kernel& kernel,
                                                           double jitter, const FitOptions& options)
{
    PLUMECAL_REQUIRE(design.rows() >= 1 && design.rows() == values.size(),
                     "GP conditioning: design rows must match the value count");
    PLUMECAL_REQUIRE(kernel.r1 > 0 && kernel.r2 > 0, "GP conditioning: kernel parameters must be > 0");
    for (Eigen::Index k = 0; k < values.size(); ++k)
        if (!std::isfinite(values(k))) throw ContractViolation("GP conditioning: training values must be finite");

    GaussianProcessEmulator gp;
    gp.design_ = design;
    gp.values_ = values;
    gp.kernel_ = kernel;
    gp.offset_ = values.mean();
    const Eigen::VectorXd centred = values.array() - gp.offset_;
    const Eigen::MatrixXd dist = pairwise_distances(design);
    for (double j = jitter;; j *= 10.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(gram(dist, kernel, j));
        if (llt.info() == Eigen::Success) {
            gp.jitter_ = j;
            gp.chol_ = llt.matrixL();
            gp.weights_ = llt.solve(centred);
            gp.lml_ = plumecal::log_marginal_likelihood(dist, centred, kernel, j).value_or(-std::numeric_limits<double>::infinity());
            return gp;
        }
        if (j * 10.0 > options.jitter_max * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "Gram matrix not positive definite (K = " << design.rows() << ", kernel " << to_string(kernel.family)
                << ", r1 = " << kernel.r1 << ", r2 = " << kernel.r2 << ") after jitter escalation to " << j << " r1";
            throw NumericalError(msg.str());
        }
    }
}

GaussianProcessEmulator GaussianProcessEmulator::fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                                                     KernelFamily family, const FitOptions& options)
{
    PLUMECAL_REQUIRE(design.rows() >= 2 && design.rows() == values.size(), "GP fit: need K >= 2 matching values");
    for (Eigen::Index k = 0; k < values.size(); ++k)
        if (!std::isfinite(values(k))) throw ContractViolation("GP fit: training values must be finite");

    const Eigen::MatrixXd dist = pairwise_distances(design);
    const Eigen::VectorXd centred = values.array() - values.mean();
    double scale = sample_variance(values);
    if (!(scale > 0)) scale = 1.0;

    const int G = std::max(options.grid_points, 2);
    const double s1 = (options.log10_r1_max - options.log10_r1_min) / (G - 1);
    const double s2 = (options.log10_r2_max - options.log10_r2_min) / (G - 1);
    auto make = [&](double lr1, double lr2) { return Kernel{family, scale * std::pow(10.0, lr1), std::pow(10.0, lr2)}; };

    for (double jitter = options.jitter_start; jitter <= options.jitter_max * (1.0 + 1e-12); jitter *= 10.0) {
        auto objective = [&](double lr1, double lr2) {
            return plumecal::log_marginal_likelihood(dist, centred, make(lr1, lr2), jitter)
                .value_or(-std::numeric_limits<double>::infinity());
        };
        double best = -std::numeric_limits<double>::infinity();
        double b1 = 0, b2 = 0;
        for (int a = 0; a < G; ++a)
            for (int b = 0; b < G; ++b) {
                const double lr1 = options.log10_r1_min + a * s1;
                const double lr2 = options.log10_r2_min + b * s2;
                const double v = objective(lr1, lr2);
                if (v > best) {
                    best = v;
                    b1 = lr1;
                    b2 = lr2;
                }
            }
        if (!std::isfinite(best)) continue;

        // coordinate refinement inside the grid box
        double step1 = s1, step2 = s2;
        for (int round = 0; round < options.refine_rounds; ++round) {
            for (int axis = 0; axis < 2; ++axis) {
                for (int dir : {+1, -1}) {
                    for (;;) {
                        double c1 = b1, c2 = b2;
                        if (axis == 0)
                            c1 += dir * step1;
                        else
                            c2 += dir * step2;
                        if (c1 < options.log10_r1_min || c1 > options.log10_r1_max || c2 < options.log10_r2_min ||
                            c2 > options.log10_r2_max)
                            break;
                        const double v = objective(c1, c2);
                        if (!(v > best)) break;
                        best = v;
                        b1 = c1;
                        b2 = c2;
                    }
                }
            }
            step1 *= options.shrink;
            step2 *= options.shrink;
        }
        return condition(design, values, make(b1, b2), jitter, options);
    }
    std::ostringstream msg;
    msg << "GP fit failed: no hyperparameter candidate factorizes (K = " << design.rows() << ", kernel "
        << to_string(family) << ", jitter up to " << options.jitter_max << " r1)";
    throw NumericalError(msg.str());
}

double GaussianProcessEmulator::mean_from_distances(std::span<const double> distances) const
{
    double m = offset_;
    for (std::size_t k = 0; k < distances.size(); ++k) m += kernel_(distances[k]) * weights_(Eigen::Index(k));
    return m;
}

double GaussianProcessEmulator::predict_mean(std::span<const double> x) const
{
    PLUMECAL_REQUIRE(x.size() == std::size_t(design_.cols()), "GP predict: dimension mismatch");
    const Eigen::Map<const Eigen::RowVectorXd> q(x.data(), Eigen::Index(x.size()));
    double m = offset_;
    for (Eigen::Index k = 0; k < design_.rows(); ++k) m += kernel_((design_.row(k) - q).norm()) * weights_(k);
    return m;
}

GpPrediction GaussianProcessEmulator::predict(std::span<const double> x) const
{
    PLUMECAL_REQUIRE(x.size() == std::size_t(design_.cols()), "GP predict: dimension mismatch");
    const Eigen::Map<const Eigen::RowVectorXd> q(x.data(), Eigen::Index(x.size()));
    Eigen::VectorXd k(design_.rows());
    for (Eigen::Index r = 0; r < design_.rows(); ++r) k(r) = kernel_((design_.row(r) - q).norm());
    GpPrediction out;
    out.mean = offset_ + k.dot(weights_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    const double var = kernel_(0.0) - v.squaredNorm();
    out.variance = var > 0 ? var : 0.0;
    for (double c : x) out.outside_box = out.outside_box || c < 0.0 || c > 1.0;
    return out;
}

std::vector<LoocvRecord> loocv(const Eigen::MatrixXd& design, const Eigen::VectorXd& values, KernelFamily family,
                               const FitOptions& options)
{
    const Eigen::Index K = design.rows();
    PLUMECAL_REQUIRE(K >= 3 && K == values.size(), "loocv: need K >= 3 matching values");
    std::vector<LoocvRecord> out;
    out.reserve(std::size_t(K));
    for (Eigen::Index h = 0; h < K; ++h) {
        Eigen::MatrixXd d(K - 1, design.cols());
        Eigen::VectorXd v(K - 1);
        for (Eigen::Index k = 0, r = 0; k < K; ++k) {
            if (k == h) continue;
            d.row(r) = design.row(k);
            v(r) = values(k);
            ++r;
        }
        LoocvRecord rec;
        rec.index = std::size_t(h);
        rec.truth = values(h);
        try {
            const auto gp = GaussianProcessEmulator::fit(d, v, family, options);
            const Eigen::VectorXd x = design.row(h).transpose();
            const auto p = gp.predict({x.data(), std::size_t(x.size())});
            rec.mean = p.mean;
            rec.sd = std::sqrt(p.variance);
        } catch (const NumericalError& e) {
            rec.ok = false;
            rec.message = e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

double loocv_r_squared(const std::vector<LoocvRecord>& records)
{
    double mean = 0;
    std::size_t n = 0;
    for (const auto& r : records)
        if (r.ok) {
            mean += r.truth;
            ++n;
        }
    if (n == 0) return -std::numeric_limits<double>::infinity();
    mean /= double(n);
    double ss_res = 0, ss_tot = 0;
    for (const auto& r : records) {
        if (!r.ok) continue;
        ss_res += (r.truth - r.mean) * (r.truth - r.mean);
        ss_tot += (r.truth - mean) * (r.truth - mean);
    }
    return ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : -std::numeric_limits<double>::infinity());
}

}  // namespace plumecal
