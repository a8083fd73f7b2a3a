#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "plumecal/bayes.hpp"
#include "plumecal/errors.hpp"

namespace plumecal {

namespace {

bool constant_sample(std::span<const double> x)
{
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
}

}  // namespace

GammaParams gamma_fit(std::span<const double> x)
{
    PLUMECAL_REQUIRE(!x.empty(), "gamma_fit: empty sample");
    double sum = 0, sum_log = 0;
    std::size_t n = 0;
    for (double v : x)
        if (v > 0) {
            sum += v;
            sum_log += std::log(v);
            ++n;
        }
    if (n < 2) throw NumericalError("gamma_fit: fewer than two positive samples");
    const double m = sum / double(n);
    double var = 0;
    for (double v : x)
        if (v > 0) var += (v - m) * (v - m);
    var /= double(n);
    const double s = std::log(m) - sum_log / double(n);
    if (!(var > 0) || !(s > 0)) throw NumericalError("gamma_fit: degenerate sample");

    double alpha = m * m / var;
    for (int it = 0; it < 100; ++it) {
        const double f = std::log(alpha) - boost::math::digamma(alpha) - s;
        const double fp = 1.0 / alpha - boost::math::trigamma(alpha);
        double next = alpha - f / fp;
        if (!(next > 0)) next = 0.5 * alpha;
        const bool done = std::abs(next - alpha) <= 1e-12 * alpha;
        alpha = next;
        if (done) break;
    }
    return {alpha, alpha / m};
}

double gamma_fit_mode(std::span<const double> x)
{
    PLUMECAL_REQUIRE(!x.empty(), "gamma_fit_mode: empty sample");
    if (constant_sample(x)) return x[0];
    return gamma_fit(x).mode();
}

double kde_mode(std::span<const double> x)
{
    PLUMECAL_REQUIRE(!x.empty(), "kde_mode: empty sample");
    if (constant_sample(x)) return x[0];
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const double n = double(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0;
    for (double e : v) ss += (e - mean) * (e - mean);
    const double sd = std::sqrt(ss / (n - 1));
    auto q = [&](double p) {
        const double h = (n - 1) * p;
        const std::size_t lo = std::size_t(h);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
    };
    const double iqr = q(0.75) - q(0.25);
    const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
    const double h = 0.9 * spread * std::pow(n, -0.2);

    auto density = [&](double at) {
        auto lo = std::lower_bound(v.begin(), v.end(), at - 8 * h);
        auto hi = std::upper_bound(v.begin(), v.end(), at + 8 * h);
        double s = 0;
        for (auto it = lo; it != hi; ++it) {
            const double z = (at - *it) / h;
            s += std::exp(-0.5 * z * z);
        }
        return s;
    };
    const int G = 512;
    double best = v.front(), best_d = -1;
    for (int g = 0; g < G; ++g) {
        const double at = v.front() + (v.back() - v.front()) * g / (G - 1);
        const double d = density(at);
        if (d > best_d) {
            best_d = d;
            best = at;
        }
    }
    // mean-shift polish from the best grid node
    for (int it = 0; it < 100; ++it) {
        auto lo = std::lower_bound(v.begin(), v.end(), best - 8 * h);
        auto hi = std::upper_bound(v.begin(), v.end(), best + 8 * h);
        double num = 0, den = 0;
        for (auto p = lo; p != hi; ++p) {
            const double z = (best - *p) / h;
            const double k = std::exp(-0.5 * z * z);
            num += k * *p;
            den += k;
        }
        if (!(den > 0)) break;
        const double next = num / den;
        const bool done = std::abs(next - best) <= 1e-10 * h;
        best = next;
        if (done) break;
    }
    return best;
}

double credible_radius(std::span<const double> x, double x_star, double mass)
{
    PLUMECAL_REQUIRE(!x.empty(), "credible_radius: empty sample");
    PLUMECAL_REQUIRE(mass > 0 && mass < 1, "credible_radius: mass must be in (0, 1)");
    std::vector<double> d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) d[k] = std::abs(x[k] - x_star);
    std::sort(d.begin(), d.end());
    const double n = double(d.size());
    std::size_t c = std::size_t(std::ceil(mass * n));
    c = std::clamp<std::size_t>(c, 1, d.size());
    while (c > 1 && double(c - 1) / n >= mass) --c;
    while (c < d.size() && double(c) / n < mass) ++c;
    return d[c - 1];
}

InferenceSummary point_estimates(const Eigen::MatrixXd& samples, const std::vector<CoordinateSpec>& coords,
                                 double mass)
{
    PLUMECAL_REQUIRE(samples.rows() >= 1, "point_estimates: no samples");
    PLUMECAL_REQUIRE(std::size_t(samples.cols()) == coords.size(), "point_estimates: one spec per coordinate");
    const Eigen::Index n = samples.rows(), m = samples.cols();
    InferenceSummary s;
    s.mass = mass;
    for (Eigen::Index c = 0; c < m; ++c) {
        const Eigen::VectorXd col = samples.col(c);
        const std::span<const double> x(col.data(), std::size_t(n));
        const auto& spec = coords[std::size_t(c)];
        double point;
        if (constant_sample(x))
            point = x[0];
        else if (spec.estimator == ModeEstimator::gamma_fit) {
            try {
                point = gamma_fit_mode(x);
            } catch (const NumericalError&) {
                point = kde_mode(x);
            }
        } else
            point = kde_mode(x);
        const double r = credible_radius(x, point, mass);
        s.names.push_back(spec.name);
        s.point.push_back(point);
        s.mean.push_back(col.mean());
        s.radius.push_back(r);
        s.lower.push_back(std::max(point - r, spec.support_lower));
        s.upper.push_back(std::min(point + r, spec.support_upper));
    }
    const Eigen::RowVectorXd star = Eigen::Map<const Eigen::RowVectorXd>(s.point.data(), m);
    const Eigen::MatrixXd centred = samples.rowwise() - star;
    s.covariance = (centred.transpose() * centred) / double(n);
    return s;
}

}  // namespace plumecal
