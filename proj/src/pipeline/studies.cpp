#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "internal.hpp"
#include "plumecal/errors.hpp"
#include "plumecal/io.hpp"
#include "plumecal/seeds.hpp"

namespace plumecal::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace detail;

std::vector<double> kde_density(std::span<const double> samples, std::span<const double> grid)
{
    PLUMECAL_REQUIRE(samples.size() >= 2, "kde_density: need at least two samples");
    const double n = double(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));
    std::vector<double> sorted(samples.begin(), samples.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
    const double h = 0.9 * (spread > 0 ? spread : 1.0) * std::pow(n, -0.2);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> f(grid.size());
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), grid[g] - 8 * h);
        auto hi = std::upper_bound(sorted.begin(), sorted.end(), grid[g] + 8 * h);
        double s = 0;
        for (auto it = lo; it != hi; ++it) {
            const double z = (grid[g] - *it) / h;
            s += std::exp(-0.5 * z * z);
        }
        f[g] = s * norm;
    }
    return f;
}

std::vector<PriorStudyRow> prior_study(const PipelineConfig& cfg, const EmulatedMatrix& emulator,
                                       std::span<const double> clean, double lambda)
{
    std::vector<PriorStudyRow> rows(cfg.study_replicates * cfg.study_taus.size());
    parallel_for(rows.size(), cfg.jobs, [&](std::size_t idx) {
        const std::size_t r = idx / cfg.study_taus.size(), t = idx % cfg.study_taus.size();
        const auto w = add_noise(clean, lambda, child_seed(cfg.seed, "study/replicate/" + std::to_string(r)));
        const auto problem = make_problem(cfg, emulator, w, lambda, cfg.study_taus[t]);
        // the chain seed is shared across tau within a replicate
        const auto res = run_inversion(problem, cfg.inversion, child_seed(cfg.seed, "study/prior/chain/" + std::to_string(r)));
        PriorStudyRow row;
        row.replicate = r;
        row.tau = cfg.study_taus[t];
        const std::size_t m = problem.prior.theta_dimension();
        for (std::size_t j = 0; j < problem.prior.source_count(); ++j) {
            row.prior_q99.push_back(problem.prior.gammas[j].quantile(0.99));
            row.radius.push_back(res.summary.radius[m + j]);
            row.point.push_back(res.summary.point[m + j]);
        }
        rows[idx] = std::move(row);
    });
    return rows;
}

EmulatorStudy emulator_study(const std::vector<InversionResult>& runs, const std::vector<std::size_t>& sizes,
                             std::size_t theta_dimension)
{
    PLUMECAL_REQUIRE(runs.size() == sizes.size() && runs.size() >= 2, "emulator_study: need one run per size, >= 2");
    const auto& ref = runs.back().retained.samples;
    const std::size_t n = std::size_t(ref.cols()) - theta_dimension;
    EmulatorStudy out;
    out.sizes = sizes;
    out.distance.assign(runs.size(), std::vector<double>(n, 0.0));
    out.max_distance.assign(runs.size(), 0.0);
    const int G = 512;
    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::Index c = Eigen::Index(theta_dimension + j);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& r : runs) {
            lo = std::min(lo, r.retained.samples.col(c).minCoeff());
            hi = std::max(hi, r.retained.samples.col(c).maxCoeff());
        }
        std::vector<double> grid(G);
        for (int g = 0; g < G; ++g) grid[std::size_t(g)] = lo + (hi - lo) * g / (G - 1);
        auto density = [&](const InversionResult& r) {
            const Eigen::VectorXd col = r.retained.samples.col(c);
            return kde_density({col.data(), std::size_t(col.size())}, grid);
        };
        const auto fref = density(runs.back());
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto f = density(runs[k]);
            double d = 0;
            for (int g = 0; g < G; ++g) d = std::max(d, std::abs(f[std::size_t(g)] - fref[std::size_t(g)]));
            out.distance[k][j] = d;
            out.max_distance[k] = std::max(out.max_distance[k], d);
        }
    }
    return out;
}

json cmd_study_prior(const PipelineConfig& cfg)
{
    PLUMECAL_REQUIRE(cfg.study_taus.size() >= 2, "study-prior: need at least two tau values");
    const auto em = EmulatedMatrix::load_json(cfg.output_dir / "emulator.json");
    const auto truth = synthetic_truth(cfg);
    const auto rows = prior_study(cfg, em, truth.clean, truth.lambda);

    io::CsvTable t;
    t.header = {"replicate", "tau"};
    const std::size_t n = cfg.q_eng.size();
    for (std::size_t j = 0; j < n; ++j) t.header.push_back("prior_q99_q" + std::to_string(j + 1));
    for (std::size_t j = 0; j < n; ++j) t.header.push_back("point_q" + std::to_string(j + 1));
    for (std::size_t j = 0; j < n; ++j) t.header.push_back("radius_q" + std::to_string(j + 1));
    for (const auto& r : rows) {
        std::vector<std::string> row{std::to_string(r.replicate), io::to_decimal(r.tau)};
        for (double v : r.prior_q99) row.push_back(io::to_decimal(v));
        for (double v : r.point) row.push_back(io::to_decimal(v));
        for (double v : r.radius) row.push_back(io::to_decimal(v));
        t.rows.push_back(row);
    }
    fs::create_directories(cfg.output_dir);
    io::write_csv(cfg.output_dir / "study_prior.csv", t);

    // rows are replicate-major, tau in configured order
    std::vector<std::size_t> order(cfg.study_taus.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cfg.study_taus[a] < cfg.study_taus[b]; });
    const std::size_t T = cfg.study_taus.size();
    bool prior_increasing = true;
    for (std::size_t k = 1; k < T; ++k)
        for (std::size_t j = 0; j < n; ++j)
            prior_increasing = prior_increasing && rows[order[k]].prior_q99[j] > rows[order[k - 1]].prior_q99[j];
    std::size_t monotone = 0;
    for (std::size_t r = 0; r < cfg.study_replicates; ++r) {
        bool ok = true;
        for (std::size_t k = 1; k < T; ++k)
            for (std::size_t j = 0; j < std::min<std::size_t>(2, n); ++j)
                ok = ok && rows[r * T + order[k]].radius[j] >= rows[r * T + order[k - 1]].radius[j];
        monotone += ok ? 1 : 0;
    }
    const json digest{{"command", "study-prior"},
                      {"taus", cfg.study_taus},
                      {"replicates", cfg.study_replicates},
                      {"prior_q99_increasing", prior_increasing},
                      {"monotone_replicates", monotone},
                      {"lambda", truth.lambda}};
    write_json(cfg.output_dir / "study_prior.json", digest);
    return digest;
}

json cmd_study_emulator(const PipelineConfig& cfg)
{
    std::vector<std::size_t> sizes = cfg.study_sizes;
    std::sort(sizes.begin(), sizes.end());
    const auto data = observed(cfg);
    const double lambda = resolve_lambda(cfg);
    const auto site = load_site(cfg.site_path);
    const auto wind = load_wind_csv(cfg.wind_path);

    std::vector<EmulatedMatrix> ems;
    for (std::size_t K : sizes) {
        const auto main_file = cfg.output_dir / "emulator.json";
        if (K == cfg.design_size && fs::exists(main_file)) {
            ems.push_back(EmulatedMatrix::load_json(main_file));
            continue;
        }
        const auto dir = cfg.output_dir / "study_emulator" / ("K" + std::to_string(K));
        const auto file = dir / "emulator.json";
        if (fs::exists(file)) {
            ems.push_back(EmulatedMatrix::load_json(file));
            continue;
        }
        const auto d = make_design(cfg, cfg.design_box, K, child_seed(cfg.seed, "study/design/K" + std::to_string(K)));
        save_design(dir / "design.csv", dir / "design.json", d);
        const auto snaps = run_snapshots(site, wind, d, cfg.fixed, cfg.solver, cfg.jobs);
        ems.push_back(EmulatedMatrix::build(d, snaps, cfg.kernel));
        ems.back().save_json(file);
    }
    std::vector<InversionResult> runs(sizes.size());
    parallel_for(sizes.size(), cfg.jobs, [&](std::size_t k) {
        const auto problem = make_problem(cfg, ems[k], data.w, lambda, cfg.tau);
        runs[k] = run_inversion(problem, cfg.inversion, child_seed(cfg.seed, "study/emulator/chain"));
    });
    const auto st = emulator_study(runs, sizes, cfg.design_box.dimension());
    json points = json::array();
    for (const auto& r : runs) points.push_back(r.summary.point);
    const json digest{{"command", "study-emulator"},
                      {"sizes", sizes},
                      {"distance", st.distance},
                      {"max_distance", st.max_distance},
                      {"points", points},
                      {"names", runs.back().names}};
    write_json(cfg.output_dir / "study_emulator.json", digest);
    return digest;
}

}  // namespace plumecal::pipeline
