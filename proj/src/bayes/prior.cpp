#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "plumecal/bayes.hpp"
#include "plumecal/errors.hpp"

namespace plumecal {

double GammaParams::quantile(double p) const
{
    const boost::math::gamma_distribution<double> g(alpha, 1.0 / beta);
    return boost::math::quantile(g, p);
}

double GammaParams::log_pdf(double x) const
{
    if (x < 0 || !std::isfinite(x)) return -std::numeric_limits<double>::infinity();
    if (x == 0) return alpha > 1 ? -std::numeric_limits<double>::infinity() : (alpha == 1 ? std::log(beta) : std::numeric_limits<double>::infinity());
    return alpha * std::log(beta) - std::lgamma(alpha) + (alpha - 1) * std::log(x) - beta * x;
}

GammaParams gamma_from_mode_quantile(double q_eng, double tau, double mass)
{
    PLUMECAL_REQUIRE(std::isfinite(q_eng) && q_eng > 0, "gamma prior: q_eng must be > 0");
    PLUMECAL_REQUIRE(std::isfinite(tau) && tau > 1, "gamma prior: tau must be > 1");
    PLUMECAL_REQUIRE(mass > 0.5 && mass < 1, "gamma prior: quantile mass must be in (0.5, 1)");

    // ratio Q(mass)/mode falls monotonically from +inf (alpha -> 1) to 1
    auto excess = [&](double alpha) {
        const GammaParams g{alpha, (alpha - 1) / q_eng};
        return g.quantile(mass) / q_eng - tau;
    };
    double lo = 1.0 + 1e-9, hi = 2.0;
    while (excess(hi) > 0) {
        lo = hi;
        hi *= 2;
        if (hi > 1e12) {
            std::ostringstream msg;
            msg << "gamma prior: no shape in [1, " << hi << "] gives Q(" << mass << ") = " << tau << " q_eng";
            throw NumericalError(msg.str());
        }
    }
    if (excess(lo) < 0) {
        std::ostringstream msg;
        msg << "gamma prior: no bracket for tau = " << tau << " (shape search range [" << lo << ", " << hi << "])";
        throw NumericalError(msg.str());
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0 ? lo : hi) = mid;
    }
    const double alpha = 0.5 * (lo + hi);
    return {alpha, (alpha - 1) / q_eng};
}

PriorSpec PriorSpec::build(ParameterBox theta_box, std::vector<double> q_eng, double tau)
{
    PriorSpec p;
    p.theta_box = std::move(theta_box);
    p.tau = tau;
    for (double q : q_eng) p.gammas.push_back(gamma_from_mode_quantile(q, tau));
    p.q_eng = std::move(q_eng);
    return p;
}

double log_prior(const PriorSpec& prior, std::span<const double> theta, std::span<const double> q)
{
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    if (theta.size() != prior.theta_dimension() || q.size() != prior.source_count()) return ninf;
    double lp = 0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const auto& r = prior.theta_box[k];
        if (!(theta[k] >= r.lower && theta[k] <= r.upper)) return ninf;
        lp -= std::log(r.upper - r.lower);
    }
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (!(q[j] >= 0)) return ninf;
        lp += prior.gammas[j].log_pdf(q[j]);
    }
    return lp;
}

double NoiseModel::log_normalization(std::size_t d) const
{
    return -0.5 * double(d) * std::log(2.0 * std::numbers::pi * lambda);
}

double log_likelihood(const Eigen::MatrixXd& a, std::span<const double> q, std::span<const double> w,
                      const NoiseModel& noise)
{
    PLUMECAL_REQUIRE(std::size_t(a.cols()) == q.size() && std::size_t(a.rows()) == w.size(),
                     "log_likelihood: shape mismatch");
    PLUMECAL_REQUIRE(noise.lambda > 0, "log_likelihood: lambda must be > 0");
    double ss = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double r = -w[std::size_t(i)];
        for (Eigen::Index j = 0; j < a.cols(); ++j) r += a(i, j) * q[std::size_t(j)];
        ss += r * r;
    }
    return -0.5 * ss / noise.lambda + noise.log_normalization(w.size());
}

}  // namespace plumecal
