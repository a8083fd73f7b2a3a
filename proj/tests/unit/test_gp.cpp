#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "plumecal/errors.hpp"
#include "plumecal/gp.hpp"
#include "unit/support.hpp"

using namespace plumecal;
using plumecal::testing::rel_err;

namespace {

Eigen::MatrixXd random_design(Eigen::Index K, Eigen::Index m, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd x(K, m);
    for (Eigen::Index r = 0; r < K; ++r)
        for (Eigen::Index c = 0; c < m; ++c) x(r, c) = u(rng);
    return x;
}

double smooth(const Eigen::RowVectorXd& x) { return std::sin(2.0 * x(0)) + 0.5 * x(1) * x(1) + 0.3 * x(2); }

std::vector<double> row(const Eigen::MatrixXd& x, Eigen::Index r)
{
    std::vector<double> v(std::size_t(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) v[std::size_t(c)] = x(r, c);
    return v;
}

}  // namespace

TEST_CASE("kernel values")
{
    CHECK(Kernel{KernelFamily::squared_exponential, 1.0, 1.0}(std::sqrt(2.0)) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(rel_err(Kernel{KernelFamily::matern32, 1.0, std::sqrt(3.0)}(1.0), 0.7357588823428847) < 1e-14);
    CHECK(Kernel{KernelFamily::exponential, 2.0, 0.5}(1.0) == doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-15));
    const double a = std::sqrt(5.0);
    CHECK(Kernel{KernelFamily::matern52, 1.0, 1.0}(1.0) ==
          doctest::Approx((1.0 + a + 5.0 / 3.0) * std::exp(-a)).epsilon(1e-15));
    for (auto f : kAllKernelFamilies) {
        const Kernel k{f, 3.0, 0.7};
        CHECK(k(0.0) == 3.0);
        CHECK(k(0.5) < k(0.1));
        CHECK(kernel_family_from_string(to_string(f)) == f);
    }
    CHECK_THROWS_AS(kernel_family_from_string("gaussian"), ConfigError);
    CHECK_THROWS_AS(kernel_eval(Kernel{}, -1.0), ContractViolation);
}

TEST_CASE("two-point closed form")
{
    Eigen::MatrixXd x(2, 2);
    x << 0.1, 0.2, 0.7, 0.5;
    Eigen::VectorXd y(2);
    y << 1.5, -0.5;
    const Kernel k{KernelFamily::squared_exponential, 2.0, 0.3};
    const double jitter = 1e-10;
    const auto gp = GaussianProcessEmulator::condition(x, y, k, jitter);

    const double s = (x.row(0) - x.row(1)).norm();
    const double a = k.r1 * (1 + jitter), c = k(s);
    const double m = 0.5, d = 1.0;  // centred values (d, -d)
    const std::vector<double> q{0.4, 0.9};
    const double k1 = k(std::hypot(q[0] - 0.1, q[1] - 0.2)), k2 = k(std::hypot(q[0] - 0.7, q[1] - 0.5));
    const double mean = m + (k1 - k2) * d / (a - c);
    const double var = k.r1 - (a * (k1 * k1 + k2 * k2) - 2 * c * k1 * k2) / (a * a - c * c);
    const auto p = gp.predict(q);
    CHECK(std::abs(p.mean - mean) < 1e-10);
    CHECK(std::abs(p.variance - var) < 1e-10);
    CHECK(gp.mean_offset() == m);
}

TEST_CASE("predictions match a dense solve")
{
    for (auto f : kAllKernelFamilies)
        for (Eigen::Index K : {3, 6, 10}) {
            const Eigen::MatrixXd x = random_design(K, 3, unsigned(K));
            Eigen::VectorXd y(K);
            for (Eigen::Index r = 0; r < K; ++r) y(r) = smooth(x.row(r));
            const Kernel k{f, 0.8, 0.4};
            const auto gp = GaussianProcessEmulator::condition(x, y, k, 1e-10);
            const double j = gp.jitter();

            Eigen::MatrixXd G(K, K);
            for (Eigen::Index a = 0; a < K; ++a)
                for (Eigen::Index b = 0; b < K; ++b) G(a, b) = k((x.row(a) - x.row(b)).norm()) + (a == b ? j * k.r1 : 0.0);
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
            const double m = y.mean();
            const Eigen::MatrixXd q = random_design(5, 3, 99);
            for (Eigen::Index r = 0; r < q.rows(); ++r) {
                Eigen::VectorXd kx(K);
                for (Eigen::Index a = 0; a < K; ++a) kx(a) = k((x.row(a) - q.row(r)).norm());
                const double mean = m + kx.dot(lu.solve((y.array() - m).matrix()));
                const double var = k.r1 - kx.dot(lu.solve(kx));
                const auto p = gp.predict(row(q, r));
                CHECK(std::abs(p.mean - mean) < 1e-10);
                CHECK(std::abs(p.variance - std::max(var, 0.0)) < 1e-10);
            }
        }
}

TEST_CASE("interpolation at design points")
{
    const Eigen::MatrixXd x = random_design(20, 3, 5);
    Eigen::VectorXd y(20);
    for (Eigen::Index r = 0; r < 20; ++r) y(r) = smooth(x.row(r));
    for (auto f : kAllKernelFamilies) {
        const auto gp = GaussianProcessEmulator::fit(x, y, f);
        const double r1 = gp.kernel().r1;
        for (Eigen::Index r = 0; r < 20; ++r) {
            const auto p = gp.predict(row(x, r));
            CHECK(std::abs(p.mean - y(r)) <= 1e-6 * (1.0 + std::abs(y(r))));
            CHECK(p.variance <= 1e-8 * r1);
            CHECK_FALSE(p.outside_box);
        }
        // far from the data the variance returns to the prior level
        const std::vector<double> far{30.0, 30.0, 30.0};
        const auto p = gp.predict(far);
        CHECK(p.outside_box);
        CHECK(rel_err(p.variance, r1) < 1e-6);
        CHECK(std::abs(p.mean - y.mean()) < 1e-6 * (1 + std::abs(y.mean())));
    }
}

TEST_CASE("constant data reproduces the constant")
{
    const Eigen::MatrixXd x = random_design(8, 2, 17);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 4.25);
    const auto gp = GaussianProcessEmulator::fit(x, y, KernelFamily::squared_exponential);
    const Eigen::MatrixXd q = random_design(10, 2, 18);
    for (Eigen::Index r = 0; r < q.rows(); ++r) CHECK(gp.predict_mean(row(q, r)) == doctest::Approx(4.25).epsilon(1e-12));
}

TEST_CASE("fitting is deterministic and the mean is continuous")
{
    const Eigen::MatrixXd x = random_design(15, 3, 8);
    Eigen::VectorXd y(15);
    for (Eigen::Index r = 0; r < 15; ++r) y(r) = smooth(x.row(r));
    const auto a = GaussianProcessEmulator::fit(x, y, KernelFamily::matern52);
    const auto b = GaussianProcessEmulator::fit(x, y, KernelFamily::matern52);
    CHECK(a.kernel().r1 == b.kernel().r1);
    CHECK(a.kernel().r2 == b.kernel().r2);
    CHECK((a.weights() - b.weights()).cwiseAbs().maxCoeff() == 0.0);

    std::vector<double> p{0.3, 0.4, 0.5}, q = p;
    q[1] += 1e-9;
    CHECK(std::abs(a.predict_mean(p) - a.predict_mean(q)) < 1e-6);
}

TEST_CASE("leave-one-out cross validation")
{
    const Eigen::MatrixXd x = random_design(30, 3, 21);
    Eigen::VectorXd y(30);
    for (Eigen::Index r = 0; r < 30; ++r) y(r) = 1.0 + 2.0 * x(r, 0) - x(r, 1) + 0.5 * x(r, 2);
    const auto rec = loocv(x, y, KernelFamily::squared_exponential);
    REQUIRE(rec.size() == 30);
    for (const auto& r : rec) CHECK(r.ok);
    CHECK(loocv_r_squared(rec) > 0.95);

    const auto three = loocv(random_design(3, 2, 1), Eigen::Vector3d(1.0, 2.0, 0.5), KernelFamily::exponential);
    CHECK(three.size() == 3);
}

TEST_CASE("fit preconditions")
{
    Eigen::MatrixXd x(1, 2);
    x << 0.5, 0.5;
    CHECK_THROWS_AS(GaussianProcessEmulator::fit(x, Eigen::VectorXd::Ones(1), KernelFamily::matern32),
                    ContractViolation);
    Eigen::VectorXd bad(3);
    bad << 1.0, NAN, 2.0;
    CHECK_THROWS_AS(GaussianProcessEmulator::fit(random_design(3, 2, 2), bad, KernelFamily::matern32),
                    ContractViolation);
}

TEST_CASE("emulated matrix")
{
    const std::size_t K = 12;
    DesignSet design;
    design.points = random_design(Eigen::Index(K), 3, 31);
    design.box = ParameterBox({{"p", 0.0, 0.6}, {"z0", 0.001, 3.0}, {"L", -600.0, -1.0}});
    std::vector<Eigen::MatrixXd> snaps;
    for (std::size_t k = 0; k < K; ++k) {
        Eigen::MatrixXd a(9, 4);
        const Eigen::RowVectorXd u = design.points.row(Eigen::Index(k));
        for (Eigen::Index i = 0; i < 9; ++i)
            for (Eigen::Index j = 0; j < 4; ++j) a(i, j) = double(1 + i + j) * (1.0 + u(0)) * std::exp(-u(1)) + 0.1 * u(2);
        snaps.push_back(a);
    }
    const auto em = EmulatedMatrix::build(design, snaps);
    CHECK(em.rows() == 9);
    CHECK(em.cols() == 4);
    std::size_t fitted = 0;
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 4; ++j) fitted += em.entry(i, j).fallback ? 0 : 1;
    CHECK(fitted == 36);

    // reproduces the snapshots at the design points
    for (std::size_t k = 0; k < K; ++k) {
        const auto a = em.mean(design.physical_point(k));
        CHECK((a - snaps[k]).cwiseAbs().maxCoeff() < 1e-6 * snaps[k].cwiseAbs().maxCoeff());
    }

    const auto path = std::filesystem::temp_directory_path() / "plumecal_gp_test.json";
    em.save_json(path);
    const auto back = EmulatedMatrix::load_json(path);
    const std::vector<double> theta{0.21, 1.3, -250.0};
    CHECK((back.mean(theta) - em.mean(theta)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.variance(theta) - em.variance(theta)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.box().index_of("z0") == 1);

    // an entry whose emulator dips below zero is clamped
    std::vector<Eigen::MatrixXd> dip;
    for (std::size_t k = 0; k < K; ++k)
        dip.push_back(Eigen::MatrixXd::Constant(1, 1, design.points(Eigen::Index(k), 0) - 0.5));
    const auto ed = EmulatedMatrix::build(design, dip);
    double clamped = 0;
    const auto low = ed.mean(std::vector<double>{0.0, 1.5, -300.0}, clamped);
    CHECK(low(0, 0) == 0.0);
    CHECK(clamped > 0.0);
}

TEST_CASE("emulator files are validated")
{
    const auto path = std::filesystem::temp_directory_path() / "plumecal_gp_bad.json";
    testing::write_file(path, "{\"format\": \"other\"}");
    CHECK_THROWS_AS(EmulatedMatrix::load_json(path), ConfigError);
    testing::write_file(path, "not json");
    CHECK_THROWS_AS(EmulatedMatrix::load_json(path), ConfigError);
}
