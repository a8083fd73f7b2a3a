#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "plumecal/bayes.hpp"
#include "plumecal/errors.hpp"
#include "unit/support.hpp"

using namespace plumecal;
using plumecal::testing::rel_err;

namespace {

// composite Simpson on [0, x] of the gamma density
double gamma_cdf_simpson(const GammaParams& g, double x)
{
    const int n = 200000;
    const double h = x / n;
    double s = 0;
    for (int k = 0; k <= n; ++k) {
        const double t = k * h;
        const double f = t == 0 ? 0.0 : std::exp(g.log_pdf(t));
        s += f * (k == 0 || k == n ? 1.0 : (k % 2 ? 4.0 : 2.0));
    }
    return s * h / 3.0;
}

ParameterBox theta_box() { return ParameterBox({{"p", 0.0, 0.6}, {"z0", 0.0, 3.0}, {"L", -600.0, 0.0}}); }

}  // namespace

TEST_CASE("gamma prior from mode and quantile")
{
    // shape depends on tau only; rates per q_eng (independent scipy evaluation)
    const double taus[] = {2, 3, 4};
    const double alphas[] = {11.22300376341854, 4.729861669122292, 3.175073139743387};
    const double q_eng[] = {35, 80, 5};
    const double betas[3][3] = {{0.29208582181195825, 0.1277875470427318, 2.0446007526837087},
                                {0.10656747626063692, 0.046623270864028635, 0.7459723338244582},
                                {0.062144946849811054, 0.02718841424679233, 0.4350146279486773}};
    for (int t = 0; t < 3; ++t)
        for (int s = 0; s < 3; ++s) {
            const auto g = gamma_from_mode_quantile(q_eng[s], taus[t]);
            CHECK(rel_err(g.alpha, alphas[t]) < 1e-9);
            CHECK(rel_err(g.beta, betas[t][s]) < 1e-9);
            CHECK(rel_err(g.mode(), q_eng[s]) < 1e-9);
            CHECK(rel_err(g.quantile(0.99), taus[t] * q_eng[s]) < 1e-6);
            CHECK(std::abs(gamma_cdf_simpson(g, taus[t] * q_eng[s]) - 0.99) < 1e-6);
        }
}

TEST_CASE("prior quantiles grow with tau")
{
    double prev_q = 0, prev_var = 0;
    for (double tau : {1.5, 2.0, 3.0, 4.0, 6.0}) {
        const auto g = gamma_from_mode_quantile(35.0, tau);
        CHECK(g.quantile(0.9) > prev_q);
        CHECK(g.alpha / (g.beta * g.beta) > prev_var);
        prev_q = g.quantile(0.9);
        prev_var = g.alpha / (g.beta * g.beta);
    }
    CHECK_THROWS_AS(gamma_from_mode_quantile(35.0, 1.0), ContractViolation);
    CHECK_THROWS_AS(gamma_from_mode_quantile(-1.0, 3.0), ContractViolation);
}

TEST_CASE("log prior")
{
    const auto prior = PriorSpec::build(theta_box(), {35, 80, 5, 5}, 3.0);
    const std::vector<double> theta{0.3, 0.1, -300}, q{35, 80, 5, 5};
    double expected = -std::log(0.6) - std::log(3.0) - std::log(600.0);
    for (std::size_t j = 0; j < 4; ++j) expected += prior.gammas[j].log_pdf(q[j]);
    CHECK(rel_err(log_prior(prior, theta, q), expected) < 1e-14);

    const std::vector<double> outside{0.7, 0.1, -300}, edge{0.6, 0.0, 0.0}, neg{35, -1, 5, 5};
    CHECK(log_prior(prior, outside, q) == -std::numeric_limits<double>::infinity());
    CHECK(std::isfinite(log_prior(prior, edge, q)));
    CHECK(log_prior(prior, theta, neg) == -std::numeric_limits<double>::infinity());
    CHECK(log_prior(prior, theta, std::vector<double>{35, 80, 5}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("Gaussian log likelihood")
{
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    const std::vector<double> q{0, 0}, w{1, 1};
    const NoiseModel noise{0.5};
    const double quad = -2.0;
    CHECK(rel_err(log_likelihood(a, q, w, noise), quad - std::log(2 * std::numbers::pi * 0.5)) < 1e-14);

    // direct multivariate normal density with covariance lambda I
    Eigen::MatrixXd b(3, 2);
    b << 1, 2, 0.5, 0.1, 3, 1;
    const std::vector<double> q2{0.7, 1.1}, w2{3.0, 0.2, 4.0};
    const double lambda = 0.3;
    const Eigen::Vector3d r = Eigen::Map<const Eigen::Vector3d>(w2.data()) - b * Eigen::Vector2d(0.7, 1.1);
    const Eigen::Matrix3d cov = lambda * Eigen::Matrix3d::Identity();
    const double direct = -0.5 * r.dot(cov.inverse() * r) - 0.5 * std::log(cov.determinant()) -
                          1.5 * std::log(2 * std::numbers::pi);
    CHECK(rel_err(log_likelihood(b, q2, w2, NoiseModel{lambda}), direct) < 1e-12);
}

TEST_CASE("adaptive sampler on a standard normal")
{
    const LogDensity target = [](std::span<const double> x) {
        double s = 0;
        for (double v : x) s += v * v;
        return -0.5 * s;
    };
    AdaptiveMhParams p;
    p.N = 200000;
    const std::vector<double> init(7, 0.5);
    const auto chain = adaptive_mh(target, init, p, 2024);
    REQUIRE(chain.size() == 200000);
    CHECK(chain.accepted[0] == 1);
    const auto kept = postprocess_chain(chain, 0.5, 1);
    const Eigen::RowVectorXd mean = kept.samples.colwise().mean();
    const Eigen::MatrixXd c = kept.samples.rowwise() - mean;
    const Eigen::VectorXd var = (c.transpose() * c).diagonal() / double(c.rows());
    for (Eigen::Index k = 0; k < 7; ++k) {
        CHECK(std::abs(mean(k)) < 0.05);
        CHECK(std::abs(var(k) - 1.0) < 0.1);
    }
    CHECK(chain.acceptance_rate() > 0.1);
    CHECK(chain.acceptance_rate() < 0.6);
    CHECK(chain.nonfinite_proposals == 0);
    // reproducible
    AdaptiveMhParams small = p;
    small.N = 500;
    const auto a = adaptive_mh(target, init, small, 5), b = adaptive_mh(target, init, small, 5);
    CHECK((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one-dimensional chain passes a chi-square test")
{
    const LogDensity target = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    AdaptiveMhParams p;
    p.N = 200000;
    const auto chain = adaptive_mh(target, std::vector<double>{0.0}, p, 77);
    const auto kept = postprocess_chain(chain, 0.5, 50);
    const boost::math::normal_distribution<double> nd;
    const int bins = 10;
    std::vector<double> counts(bins, 0.0);
    for (Eigen::Index r = 0; r < kept.samples.rows(); ++r) {
        const int b = std::min(bins - 1, int(boost::math::cdf(nd, kept.samples(r, 0)) * bins));
        counts[std::size_t(b)] += 1;
    }
    const double e = double(kept.samples.rows()) / bins;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - e) * (c - e) / e;
    const double crit = boost::math::quantile(boost::math::chi_squared_distribution<double>(bins - 1), 0.99);
    MESSAGE("chi2 " << chi2 << " critical " << crit);
    CHECK(chi2 < crit);
}

TEST_CASE("equal-density proposals are always accepted")
{
    const LogDensity flat = [](std::span<const double>) { return 1.5; };
    AdaptiveMhParams p;
    p.N = 2000;
    const auto chain = adaptive_mh(flat, std::vector<double>{0.0, 0.0, 0.0}, p, 3);
    CHECK(chain.acceptance_rate() == 1.0);
}

TEST_CASE("non-finite proposals are rejected and counted")
{
    const LogDensity bad = [](std::span<const double> x) {
        return x[0] > 0.05 ? std::numeric_limits<double>::quiet_NaN() : -0.5 * x[0] * x[0];
    };
    AdaptiveMhParams p;
    p.N = 3000;
    const auto chain = adaptive_mh(bad, std::vector<double>{0.0}, p, 9);
    CHECK(chain.nonfinite_proposals > 0);
    CHECK(chain.states.col(0).maxCoeff() <= 0.05);
    CHECK_THROWS(adaptive_mh(bad, std::vector<double>{1.0}, p, 9));
}

TEST_CASE("burn-in and thinning")
{
    auto make = [](std::size_t n) {
        PosteriorChain c;
        c.states = Eigen::MatrixXd::Zero(Eigen::Index(n), 1);
        for (std::size_t k = 0; k < n; ++k) c.states(Eigen::Index(k), 0) = double(k);
        c.accepted.assign(n, 1);
        c.log_post.assign(n, 0.0);
        return c;
    };
    CHECK(postprocess_chain(make(1000000)).samples.rows() == 50000);
    const auto t = postprocess_chain(make(100));
    REQUIRE(t.samples.rows() == 5);
    CHECK(t.indices.front() == 50);
    CHECK(t.samples(4, 0) == 90.0);
    const auto id = postprocess_chain(make(7), 0.0, 1);
    CHECK(id.samples.rows() == 7);
}

TEST_CASE("gamma fit and KDE modes")
{
    std::mt19937_64 rng(4);
    std::gamma_distribution<double> g(3.0, 10.0);  // rate 0.1, mode 20
    std::vector<double> x(20000);
    for (auto& v : x) v = g(rng);
    CHECK(std::abs(gamma_fit_mode(x) - 20.0) < 1.0);
    const auto fit = gamma_fit(x);
    CHECK(fit.alpha == doctest::Approx(3.0).epsilon(0.05));

    std::normal_distribution<double> n(2.0, 0.5);
    std::vector<double> y(20000);
    for (auto& v : y) v = n(rng);
    CHECK(std::abs(kde_mode(y) - 2.0) < 0.1);  // mode estimates converge slowly

    const std::vector<double> c(10, 4.0);
    CHECK(gamma_fit_mode(c) == 4.0);
    CHECK(kde_mode(c) == 4.0);
}

TEST_CASE("credible radius")
{
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(credible_radius(x, 5.0, 0.5) == 2.0);  // {3..7}
    CHECK(credible_radius(x, 0.0, 0.68) == 7.0);
    CHECK(credible_radius(std::vector<double>{3.0}, 1.0, 0.5) == 2.0);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> s(301);
    for (auto& v : s) v = n(rng);
    for (double mass : {0.1, 0.5, 0.68, 0.95}) {
        // brute force: smallest candidate distance with enough mass inside
        double brute = std::numeric_limits<double>::infinity();
        for (double cand : s) {
            const double r = std::abs(cand - 0.2);
            std::size_t in = 0;
            for (double v : s) in += std::abs(v - 0.2) <= r ? 1 : 0;
            if (double(in) / double(s.size()) >= mass) brute = std::min(brute, r);
        }
        CHECK(credible_radius(s, 0.2, mass) == brute);
    }
}

TEST_CASE("point estimates")
{
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0, 1);
    std::gamma_distribution<double> g(4.0, 2.0);
    Eigen::MatrixXd s(5000, 2);
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        s(r, 0) = 0.3 + 0.05 * n(rng);
        s(r, 1) = g(rng);
    }
    const std::vector<CoordinateSpec> spec{{"p", ModeEstimator::kde, 0.0, 0.6}, {"q1", ModeEstimator::gamma_fit, 0.0}};
    const auto sum = point_estimates(s, spec, 0.68);
    CHECK(std::abs(sum.point[0] - 0.3) < 0.02);
    CHECK(std::abs(sum.point[1] - 6.0) < 0.5);
    CHECK(sum.lower[1] >= 0.0);
    CHECK(sum.radius[0] > 0.03);
    CHECK(sum.radius[0] < 0.07);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sum.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= 0.0);
    CHECK(sum.names[1] == "q1");
}
