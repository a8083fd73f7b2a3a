// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "plumecal/errors.hpp"
#include "plumecal/io.hpp"
#include "plumecal/pipeline.hpp"
#include "plumecal/seeds.hpp"
#include "unit/support.hpp"

using namespace plumecal;
using namespace plumecal::pipeline;
namespace fs = std::filesystem;
using testing::rel_err;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd uniform_points(Eigen::Index K, Eigen::Index m, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd x(K, m);
    for (Eigen::Index r = 0; r < K; ++r)
        for (Eigen::Index c = 0; c < m; ++c) x(r, c) = u(rng);
    return x;
}

std::vector<double> row_of(const Eigen::MatrixXd& x, Eigen::Index r)
{
    std::vector<double> v(std::size_t(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) v[std::size_t(c)] = x(r, c);
    return v;
}

// --- criterion 1: full pipeline shape ---------------------------------------
Outcome pipeline_shape(const PipelineConfig& cfg, bool reuse)
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto site = load_site(cfg.site_path);
    const bool have = reuse && fs::exists(cfg.output_dir / "emulator.json");
    if (!have) {
        cmd_design(cfg);
        cmd_snapshot(cfg);
        cmd_train(cfg);
    }
    cmd_synthesize(cfg);
    const auto summary = cmd_invert(cfg);
    const double elapsed = seconds_since(t0);

    const auto em = EmulatedMatrix::load_json(cfg.output_dir / "emulator.json");
    std::size_t fitted = 0;
    for (std::size_t i = 0; i < em.rows(); ++i)
        for (std::size_t j = 0; j < em.cols(); ++j) fitted += em.entry(i, j).fallback ? 0 : 1;
    const std::size_t N = cfg.inversion.mcmc.N;
    const auto expected = std::size_t(std::ceil(double(N - std::size_t(cfg.inversion.burn_in_fraction * double(N))) /
                                                double(cfg.inversion.thinning)));
    const auto retained = summary["retained"].get<std::size_t>();
    const auto& mh = cfg.inversion.mcmc;

    o.detail << "n=" << site.source_count() << " d=" << site.receptor_count() << " K=" << em.design().rows()
             << " emulators=" << fitted << " N=" << N << " retained=" << retained << " acceptance="
             << summary["acceptance_rate"].get<double>() << " runtime=" << std::lround(elapsed) << "s"
             << (have ? " (emulator reused)" : "");
    o.check(site.source_count() == 4 && site.receptor_count() == 9, "n=4, d=9");
    o.check(em.design().rows() == 64, "K=64");
    o.check(em.rows() * em.cols() == 36 && fitted == 36, "36 fitted entry emulators");
    o.check(mh.beta == 0.05 && mh.gamma1 == 0.01 && mh.gamma2 == 5.6644 && mh.gamma3 == 0.01,
            "sampler constants");
    o.check(cfg.inversion.burn_in_fraction == 0.5 && cfg.inversion.thinning == 10, "burn-in half, thin 10");
    o.check(retained == expected, "retained count");
    if (N == 1000000) o.check(retained == 50000, "50,000 retained samples");
    o.check(elapsed < 1800, "runtime under 30 min");
    return o;
}

// --- criterion 2: synthetic truth recovery -----------------------------------
Outcome recovery(const PipelineConfig& cfg)
{
    Outcome o;
    const auto em = EmulatedMatrix::load_json(cfg.output_dir / "emulator.json");
    const auto site = load_site(cfg.site_path);
    const auto wind = load_wind_csv(cfg.wind_path);
    const std::size_t n = cfg.q_true.size();
    const std::size_t m = cfg.design_box.dimension();
    const std::size_t R = 5;
    std::vector<std::size_t> covered(n, 0);
    std::size_t close = 0;
    std::ostringstream rows;
    for (std::size_t r = 0; r < R; ++r) {
        const auto s = synthesize(site, wind, cfg.design_box, cfg.fixed, cfg.solver, cfg.theta_true, cfg.q_true, -1.0,
                                  cfg.snr_target, child_seed(cfg.seed, "acceptance/replicate/" + std::to_string(r)));
        const auto problem = make_problem(cfg, em, s.w, s.lambda, cfg.tau);
        const auto res =
            run_inversion(problem, cfg.inversion, child_seed(cfg.seed, "acceptance/chain/" + std::to_string(r)));
        bool near = true;
        rows << " r" << r << ":";
        for (std::size_t j = 0; j < n; ++j) {
            const double pt = res.summary.point[m + j], rad = res.summary.radius[m + j];
            covered[j] += std::abs(pt - cfg.q_true[j]) <= rad ? 1 : 0;
            if (j < 2) near = near && std::abs(pt - cfg.q_true[j]) <= 0.35 * cfg.q_true[j];
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s%.1f+-%.1f", j ? "," : "", pt, rad);
            rows << buf;
        }
        close += near ? 1 : 0;
    }
    o.detail << "ball coverage per q_j of " << R << ":";
    for (std::size_t j = 0; j < n; ++j) o.detail << " " << covered[j];
    o.detail << "; q1,q2 within 35% in " << close << "/" << R << ";" << rows.str();
    for (std::size_t j = 0; j < n; ++j) o.check(covered[j] >= 4, "q" + std::to_string(j + 1) + " ball coverage");
    o.check(close >= 4, "q1,q2 point within 35%");
    return o;
}

// --- criterion 3: GP oracles -------------------------------------------------
Outcome gp_oracles()
{
    Outcome o;
    double worst = 0;
    {
        Eigen::MatrixXd x(2, 2);
        x << 0.1, 0.2, 0.7, 0.5;
        Eigen::VectorXd y(2);
        y << 1.5, -0.5;
        const Kernel k{KernelFamily::squared_exponential, 2.0, 0.3};
        const double jitter = 1e-10;
        const auto gp = GaussianProcessEmulator::condition(x, y, k, jitter);
        const double a = k.r1 * (1 + jitter), c = k((x.row(0) - x.row(1)).norm());
        const std::vector<double> q{0.4, 0.9};
        const double k1 = k(std::hypot(q[0] - 0.1, q[1] - 0.2)), k2 = k(std::hypot(q[0] - 0.7, q[1] - 0.5));
        const double mean = 0.5 + (k1 - k2) * 1.0 / (a - c);
        const double var = k.r1 - (a * (k1 * k1 + k2 * k2) - 2 * c * k1 * k2) / (a * a - c * c);
        const auto p = gp.predict(q);
        worst = std::max({worst, std::abs(p.mean - mean), std::abs(p.variance - var)});
    }
    auto smooth = [](const Eigen::RowVectorXd& x) { return std::sin(2.0 * x(0)) + 0.5 * x(1) * x(1) + 0.3 * x(2); };
    for (auto f : kAllKernelFamilies)
        for (Eigen::Index K : {3, 6, 10}) {
            const Eigen::MatrixXd x = uniform_points(K, 3, unsigned(K));
            Eigen::VectorXd y(K);
            for (Eigen::Index r = 0; r < K; ++r) y(r) = smooth(x.row(r));
            const Kernel k{f, 0.8, 0.4};
            const auto gp = GaussianProcessEmulator::condition(x, y, k, 1e-10);
            Eigen::MatrixXd G(K, K);
            for (Eigen::Index a = 0; a < K; ++a)
                for (Eigen::Index b = 0; b < K; ++b)
                    G(a, b) = k((x.row(a) - x.row(b)).norm()) + (a == b ? gp.jitter() * k.r1 : 0.0);
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
            const Eigen::MatrixXd q = uniform_points(5, 3, 99);
            for (Eigen::Index r = 0; r < q.rows(); ++r) {
                Eigen::VectorXd kx(K);
                for (Eigen::Index a = 0; a < K; ++a) kx(a) = k((x.row(a) - q.row(r)).norm());
                const double mean = y.mean() + kx.dot(lu.solve((y.array() - y.mean()).matrix()));
                const double var = std::max(k.r1 - kx.dot(lu.solve(kx)), 0.0);
                const auto p = gp.predict(row_of(q, r));
                worst = std::max({worst, std::abs(p.mean - mean), std::abs(p.variance - var)});
            }
        }
    double var_ratio = 0;
    const Eigen::MatrixXd x = uniform_points(20, 3, 5);
    Eigen::VectorXd y(20);
    for (Eigen::Index r = 0; r < 20; ++r) y(r) = smooth(x.row(r));
    for (auto f : kAllKernelFamilies) {
        const auto gp = GaussianProcessEmulator::fit(x, y, f);
        for (Eigen::Index r = 0; r < 20; ++r)
            var_ratio = std::max(var_ratio, gp.predict(row_of(x, r)).variance / gp.kernel().r1);
    }
    const Eigen::MatrixXd xl = uniform_points(40, 3, 21);
    Eigen::VectorXd yl(40);
    for (Eigen::Index r = 0; r < 40; ++r) yl(r) = smooth(xl.row(r));
    const double r2 = loocv_r_squared(loocv(xl, yl, KernelFamily::squared_exponential));

    o.detail << "max oracle gap " << worst << ", max design variance/r1 " << var_ratio << ", LOOCV R2 " << r2;
    o.check(worst <= 1e-10, "conditioning oracle 1e-10");
    o.check(var_ratio <= 1e-8, "design-point variance");
    o.check(r2 > 0.95, "LOOCV R2 > 0.95");
    return o;
}

// --- criterion 4: maximin -----------------------------------------------------
Outcome maximin(const PipelineConfig& cfg)
{
    Outcome o;
    const auto two = particle_swarm_maximin(2, 1, 500, 20, 3);
    const auto four = particle_swarm_maximin(4, 1, 2000, 20, 3);
    bool monotone = std::is_sorted(two.best_trace.begin(), two.best_trace.end()) &&
                    std::is_sorted(four.best_trace.begin(), four.best_trace.end());
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto d = particle_swarm_maximin(16, 3, 200, 12, seed);
        monotone = monotone && std::is_sorted(d.best_trace.begin(), d.best_trace.end());
    }
    const auto dj = io::read_text(cfg.output_dir / "design.json");
    const auto trace = nlohmann::json::parse(dj)["best_trace"].get<std::vector<double>>();
    monotone = monotone && std::is_sorted(trace.begin(), trace.end());
    o.detail << "K=2 score " << two.score << ", K=4 score " << four.score << " (optimum 1/3), traces monotone "
             << (monotone ? "yes" : "no");
    o.check(two.score >= 0.95, "K=2 score");
    o.check(std::abs(four.score - 1.0 / 3.0) <= 0.1 / 3.0, "K=4 within 10%");
    o.check(monotone, "monotone traces");
    return o;
}

// --- criterion 5: Sobol and screening ------------------------------------------
Outcome sobol(const PipelineConfig& cfg)
{
    Outcome o;
    constexpr double pi = std::numbers::pi;
    const ParameterBox box({{"x1", -pi, pi}, {"x2", -pi, pi}, {"x3", -pi, pi}, {"x4", -pi, pi}});
    const PointFunction ishigami = [](std::span<const double> x) {
        return std::sin(x[0]) + 7.0 * std::sin(x[1]) * std::sin(x[1]) + 0.1 * std::pow(x[2], 4) * std::sin(x[0]);
    };
    // analytic totals for a = 7, b = 0.1
    const double a = 7, b = 0.1;
    const double v1 = 0.5 * std::pow(1 + b * std::pow(pi, 4) / 5, 2), v2 = a * a / 8;
    const double v13 = b * b * std::pow(pi, 8) * (1.0 / 18 - 1.0 / 50);
    const double V = v1 + v2 + v13;
    const double exact[] = {(v1 + v13) / V, v2 / V, v13 / V, 0.0};
    double worst = 0, unused = 0;
    for (std::uint64_t seed : {1u, 7u, 99u}) {
        const auto s = sobol_total_indices(ishigami, box, 16384, seed);
        for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(s.total[std::size_t(k)] - exact[k]));
        unused = std::max(unused, std::abs(s.total[3]));
    }

    // constructed map: z_cut has no effect, L only through a weak term
    DesignSet d = latin_hypercube(40, 5, 3);
    d.box = ParameterBox({{"p", 0.0, 0.6}, {"z0", 0.001, 3.0}, {"L", -600.0, -1.0}, {"z_i", 50.0, 500.0},
                          {"z_cut", 0.5, 5.0}});
    Eigen::MatrixXd values(40, 2);
    for (Eigen::Index k = 0; k < 40; ++k) {
        const auto u = d.points.row(k);
        values(k, 0) = 1.0 + 2.0 * u(0) + u(1) * u(1) + 0.02 * u(2) + 0.3 * u(3) + 0.01 * u(4);
        values(k, 1) = 0.5 + std::exp(u(0)) + 0.5 * u(1) + 0.02 * u(2) + 0.01 * u(4);
    }
    ScreeningOptions opt;
    opt.base_samples = 1024;
    const auto constructed = screen_parameters(d, values, opt, 11);
    const bool drops_zcut = !constructed.verdict[4].kept;

    // real forward map on the coarse grid
    const auto digest = cmd_sensitivity(cfg);
    std::vector<std::pair<double, std::string>> ranked;
    std::set<std::string> dropped;
    for (const auto& v : digest["verdict"]) {
        ranked.push_back({v["median_total"].get<double>(), v["parameter"].get<std::string>()});
        if (!v["kept"].get<bool>()) dropped.insert(v["parameter"].get<std::string>());
    }
    std::sort(ranked.rbegin(), ranked.rend());
    const std::set<std::string> top2{ranked[0].second, ranked[1].second};

    o.detail << "Ishigami max error " << worst << ", unused index " << unused << ", constructed map drops z_cut "
             << (drops_zcut ? "yes" : "no") << "; coarse map medians:";
    for (const auto& [v, name] : ranked) o.detail << " " << name << "=" << v;
    o.detail << "; dropped:";
    for (const auto& s : dropped) o.detail << " " << s;
    o.check(worst <= 0.05, "Ishigami totals within 0.05");
    o.check(unused < 0.05, "unused variable index");
    o.check(drops_zcut, "constructed map drops z_cut");
    o.check(top2.count("p") && top2.count("z0"), "p and z0 top-2 on the coarse forward map");
    return o;
}

// --- criterion 6: gamma priors ---------------------------------------------------
double simpson_cdf(const GammaParams& g, double x)
{
    const int n = 20000;
    const double h = x / n;
    double s = 0;
    for (int k = 1; k <= n; ++k) {
        const double f = std::exp(g.log_pdf(k * h));
        s += f * (k == n ? 1.0 : (k % 2 ? 4.0 : 2.0));
    }
    return s * h / 3.0;
}

// quantile by bisection on the quadrature CDF
double oracle_quantile(const GammaParams& g, double p)
{
    double lo = 0, hi = 1;
    while (simpson_cdf(g, hi) < p) hi *= 2;
    for (int it = 0; it < 60 && hi - lo > 1e-10 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (simpson_cdf(g, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome gamma_priors(const PipelineConfig& cfg)
{
    Outcome o;
    double mode_err = 0, q_err = 0, oracle_err = 0;
    for (double tau : {2.0, 3.0, 4.0})
        for (double q : cfg.q_eng) {
            const auto g = gamma_from_mode_quantile(q, tau);
            mode_err = std::max(mode_err, rel_err(g.mode(), q));
            q_err = std::max(q_err, rel_err(g.quantile(0.99), tau * q));
            oracle_err = std::max(oracle_err, rel_err(oracle_quantile(g, 0.99), tau * q));
        }
    o.detail << "max mode rel err " << mode_err << ", max 0.99-quantile rel err " << q_err
             << ", quadrature oracle rel err " << oracle_err;
    o.check(mode_err <= 1e-9, "mode 1e-9");
    o.check(q_err <= 1e-6, "quantile 1e-6");
    o.check(oracle_err <= 1e-6, "independent quantile oracle 1e-6");
    return o;
}

// --- criterion 7: sampler ---------------------------------------------------------
Outcome sampler()
{
    Outcome o;
    const LogDensity normal = [](std::span<const double> x) {
        double s = 0;
        for (double v : x) s += v * v;
        return -0.5 * s;
    };
    AdaptiveMhParams p;
    p.N = 200000;
    const auto chain = adaptive_mh(normal, std::vector<double>(7, 0.5), p, 2024);
    const auto kept = postprocess_chain(chain, 0.5, 1);
    const Eigen::RowVectorXd mean = kept.samples.colwise().mean();
    const Eigen::MatrixXd c = kept.samples.rowwise() - mean;
    const Eigen::VectorXd var = (c.transpose() * c).diagonal() / double(c.rows());
    const double mean_err = mean.cwiseAbs().maxCoeff(), var_err = (var.array() - 1.0).abs().maxCoeff();

    const LogDensity one = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
    const auto c1 = adaptive_mh(one, std::vector<double>{0.0}, p, 77);
    const auto k1 = postprocess_chain(c1, 0.5, 50);
    const boost::math::normal_distribution<double> nd;
    const int bins = 10;
    std::vector<double> counts(bins, 0.0);
    for (Eigen::Index r = 0; r < k1.samples.rows(); ++r)
        counts[std::size_t(std::min(bins - 1, int(boost::math::cdf(nd, k1.samples(r, 0)) * bins)))] += 1;
    const double e = double(k1.samples.rows()) / bins;
    double chi2 = 0;
    for (double v : counts) chi2 += (v - e) * (v - e) / e;
    const double crit = boost::math::quantile(boost::math::chi_squared_distribution<double>(bins - 1), 0.99);

    const LogDensity flat = [](std::span<const double>) { return 1.5; };
    AdaptiveMhParams pf;
    pf.N = 2000;
    const double flat_rate = adaptive_mh(flat, std::vector<double>{0.0, 0.0, 0.0}, pf, 3).acceptance_rate();

    o.detail << "7-D max |mean| " << mean_err << ", max |var-1| " << var_err << "; chi2 " << chi2 << " < " << crit
             << "; flat acceptance " << flat_rate;
    o.check(mean_err < 0.05, "means within 0.05");
    o.check(var_err < 0.1, "variances within 0.1");
    o.check(chi2 < crit, "chi-square at 1%");
    o.check(flat_rate == 1.0, "equal-density proposals accepted");
    return o;
}

// --- criterion 8: solver ----------------------------------------------------------
Outcome solver()
{
    Outcome o;
    auto site = testing::small_site();
    site.v_set = 0;
    site.v_dep = 0;
    SolverOptions closed;
    closed.closed_box = true;
    const std::vector<double> q{2.0, 0.5};
    const std::vector<double> times{300.0, 1800.0, 3600.0};
    double mass_err = 0;
    for (const auto& f : solve_concentration(ModelParams{}, q, site, testing::westerly(), times, closed))
        mass_err = std::max(mass_err, rel_err(f.total_mass(), f.time * 2.5));

    const auto open = testing::small_site();
    const std::vector<double> t{3600.0}, q2{4.0, 1.0};
    const auto a = solve_concentration(ModelParams{}, q, open, testing::westerly(), t);
    const auto b = solve_concentration(ModelParams{}, q2, open, testing::westerly(), t);
    double lin = 0;
    for (std::size_t m = 0; m < a[0].values.size(); ++m)
        if (std::abs(a[0].values[m]) > 1e-300) lin = std::max(lin, rel_err(b[0].values[m], 2 * a[0].values[m]));

    WindRecord wind({{0.0, 3.0, 1.5 * std::numbers::pi}, {1200.0, 2.0, 1.3 * std::numbers::pi}});
    double combined = 0;
    for (int bins : {0, 16}) {
        SolverOptions opt;
        opt.wind_bins = bins;
        const auto A = source_receptor_matrix(ModelParams{}, open, wind, opt);
        const std::vector<double> qq{3.7, 1.9};
        const auto w = deposition_measurements(ModelParams{}, qq, open, wind, opt);
        const Eigen::VectorXd aq = A.apply(qq);
        for (std::size_t i = 0; i < w.size(); ++i) combined = std::max(combined, rel_err(aq(Eigen::Index(i)), w[i]));
    }
    const double factor = testing::convergence_factor();
    o.detail << "closed-box mass err " << mass_err << ", linearity err " << lin << ", A q vs combined " << combined
             << ", grid-convergence factor " << factor;
    o.check(mass_err < 1e-6, "mass conservation");
    o.check(lin < 1e-10, "linearity");
    o.check(combined < 1e-10, "A q equals combined run");
    o.check(factor >= 1.8, "convergence factor >= 1.8");
    return o;
}

// --- criterion 9: studies -------------------------------------------------------
Outcome studies(const PipelineConfig& cfg)
{
    Outcome o;
    const auto prior = cmd_study_prior(cfg);
    const auto emul = cmd_study_emulator(cfg);
    const auto sizes = emul["sizes"].get<std::vector<std::size_t>>();
    const auto dist = emul["max_distance"].get<std::vector<double>>();
    double d16 = NAN, d32 = NAN;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] == 16) d16 = dist[k];
        if (sizes[k] == 32) d32 = dist[k];
    }
    const bool increasing = prior["prior_q99_increasing"].get<bool>();
    const auto monotone = prior["monotone_replicates"].get<std::size_t>();
    o.detail << "prior q99 increasing in tau " << (increasing ? "yes" : "no") << ", q1/q2 radii nondecreasing in "
             << monotone << "/" << cfg.study_replicates << " seeds; KDE max-norm distance to K=64: K=16 " << d16
             << ", K=32 " << d32 << "; per source (q1..qn) K=16/K=32:";
    const auto per = emul["distance"];
    for (std::size_t j = 0; j < per[0].size(); ++j)
        o.detail << " " << per[0][j].get<double>() << "/" << per[1][j].get<double>();
    o.check(increasing, "prior quantile increasing");
    o.check(monotone >= 4, "radii monotone in >= 4 of 5");
    o.check(d32 < d16, "K=32 closer than K=16");
    return o;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance suite"};
    std::string config = PLUMECAL_DATA_DIR "/pipeline.toml";
    std::string work = "acceptance_work";
    bool quick = false, reuse = false;
    std::size_t jobs = 1;
    std::vector<int> only;
    app.add_option("--config", config, "pipeline TOML");
    app.add_option("--work", work, "work directory for pipeline outputs");
    app.add_flag("--quick", quick, "chains of 1e5 steps instead of the configured length");
    app.add_flag("--reuse", reuse, "reuse an emulator already in the work directory");
    app.add_option("--jobs", jobs, "worker threads");
    app.add_option("--only", only, "run these criteria only");
    CLI11_PARSE(app, argc, argv);

    auto cfg = load_config(config);
    cfg.output_dir = fs::absolute(work);
    cfg.jobs = jobs;
    cfg.lambda_from = "synthetic";
    cfg.lambda.reset();
    cfg.lambda_true.reset();
    if (quick) cfg.inversion.mcmc.N = 100000;
    fs::create_directories(cfg.output_dir);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, [&] { return pipeline_shape(cfg, reuse); }},
        {2, [&] { return recovery(cfg); }},
        {3, [] { return gp_oracles(); }},
        {4, [&] { return maximin(cfg); }},
        {5, [&] { return sobol(cfg); }},
        {6, [&] { return gamma_priors(cfg); }},
        {7, [] { return sampler(); }},
        {8, [] { return solver(); }},
        {9, [&] { return studies(cfg); }},
    };
    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "error: " << e.what();
        }
        failed += out.pass ? 0 : 1;
        std::cout << "criterion " << id << ": " << (out.pass ? "PASS" : "FAIL") << " (" << std::lround(seconds_since(t0))
                  << "s) " << out.detail.str() << std::endl;
    }
    return failed ? 1 : 0;
}
