#include <algorithm>
#include <cmath>
#include <random>

#include <boost/random/sobol.hpp>

#include "plumecal/errors.hpp"
#include "plumecal/sensitivity.hpp"

namespace plumecal {

SobolResult sobol_total_indices(const BatchFunction& f, const ParameterBox& box, std::size_t N, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(N >= 64, "sobol_total_indices: need N >= 64 base samples");
    const std::size_t m = box.dimension();
    PLUMECAL_REQUIRE(m >= 1, "sobol_total_indices: empty box");

    // Cranley-Patterson rotation of the first N points (origin skipped)
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(2 * m);
    for (auto& s : shift) s = unif(rng);
    boost::random::sobol qrng(2 * m);
    qrng.discard(2 * m);

    const Eigen::Index rows = static_cast<Eigen::Index>(N), cols = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd A(rows, cols), B(rows, cols);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < 2 * m; ++c) {
            double u = std::ldexp(double(qrng()), -64) + shift[c];
            if (u >= 1.0) u -= 1.0;
            const auto& r = box[c % m];
            const double x = r.lower + u * (r.upper - r.lower);
            if (c < m)
                A(Eigen::Index(n), Eigen::Index(c)) = x;
            else
                B(Eigen::Index(n), Eigen::Index(c - m)) = x;
        }

    const Eigen::VectorXd fa = f(A), fb = f(B);
    PLUMECAL_REQUIRE(std::size_t(fa.size()) == N && std::size_t(fb.size()) == N,
                     "sobol_total_indices: function returned the wrong number of outputs");
    const double mean = (fa.sum() + fb.sum()) / double(2 * N);
    const double var =
        ((fa.array() - mean).square().sum() + (fb.array() - mean).square().sum()) / double(2 * N);

    SobolResult out;
    out.total.assign(m, 0.0);
    out.variance = var;
    if (!std::isfinite(var)) throw NumericalError("sobol_total_indices: non-finite output variance");
    if (!(var > 1e-24 * std::max(mean * mean, 1e-300))) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < m; ++i) {
        Eigen::MatrixXd ab = A;
        ab.col(Eigen::Index(i)) = B.col(Eigen::Index(i));
        const Eigen::VectorXd fab = f(ab);
        out.total[i] = (fa - fab).squaredNorm() / (2.0 * double(N)) / var;
    }
    return out;
}

SobolResult sobol_total_indices(const PointFunction& f, const ParameterBox& box, std::size_t N, std::uint64_t seed)
{
    const BatchFunction batch = [&f](const Eigen::MatrixXd& x) {
        Eigen::VectorXd y(x.rows());
        std::vector<double> row(std::size_t(x.cols()));
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) row[std::size_t(c)] = x(r, c);
            y(r) = f(row);
        }
        return y;
    };
    return sobol_total_indices(batch, box, N, seed);
}

double quantile_type7(std::vector<double> values, double p)
{
    PLUMECAL_REQUIRE(!values.empty(), "quantile: empty sample");
    PLUMECAL_REQUIRE(p >= 0.0 && p <= 1.0, "quantile: p must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (double(values.size()) - 1.0) * p;
    const std::size_t lo = std::size_t(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - double(lo)) * (values[hi] - values[lo]);
}

BoxplotStats boxplot_stats(std::span<const double> values)
{
    PLUMECAL_REQUIRE(!values.empty(), "boxplot_stats: empty sample");
    std::vector<double> v(values.begin(), values.end());
    BoxplotStats s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    s.q1 = quantile_type7(v, 0.25);
    s.median = quantile_type7(v, 0.5);
    s.q3 = quantile_type7(v, 0.75);
    s.iqr = s.q3 - s.q1;
    s.whisker_high = std::min(s.max, s.q3 + 1.5 * s.iqr);
    s.whisker_low = std::max(s.min, s.q1 - 1.5 * s.iqr);
    return s;
}

}  // namespace plumecal
