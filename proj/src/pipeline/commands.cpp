#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "internal.hpp"
#include "plumecal/errors.hpp"
#include "plumecal/io.hpp"
#include "plumecal/seeds.hpp"

namespace plumecal::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace detail {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= n) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

json read_json(const fs::path& path)
{
    if (!fs::exists(path)) throw ConfigError("missing input " + path.string() + " (run the producing command first)");
    try {
        return json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j)
{
    fs::create_directories(path.parent_path());
    io::write_text(path, j.dump(2) + "\n");
}

void save_design(const fs::path& csv, const fs::path& js, const DesignSet& d)
{
    io::CsvTable t;
    t.header.push_back("k");
    for (const auto& r : d.box.ranges()) t.header.push_back(r.name);
    json pts = json::array();
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto x = d.physical_point(k);
        std::vector<std::string> row{std::to_string(k)};
        for (double v : x) row.push_back(io::to_decimal(v));
        t.rows.push_back(row);
        json u = json::array();
        for (std::size_t c = 0; c < d.dimension(); ++c) u.push_back(io::to_hex(d.points(Eigen::Index(k), Eigen::Index(c))));
        pts.push_back(u);
    }
    fs::create_directories(csv.parent_path());
    io::write_csv(csv, t);
    json box = json::array();
    for (const auto& r : d.box.ranges())
        box.push_back({{"name", r.name}, {"lower", io::to_hex(r.lower)}, {"upper", io::to_hex(r.upper)}});
    json trace = json::array();
    for (double v : d.best_trace) trace.push_back(v);
    write_json(js, {{"format", "plumecal-design"},
                    {"version", 1},
                    {"seed", d.seed},
                    {"iterations", d.iterations},
                    {"score", d.score},
                    {"box", box},
                    {"unit_points", pts},
                    {"best_trace", trace}});
}

DesignSet load_design(const fs::path& js)
{
    const json j = read_json(js);
    try {
        if (j.at("format").get<std::string>() != "plumecal-design") throw ConfigError(js.string() + ": not a design file");
        DesignSet d;
        std::vector<ParameterRange> ranges;
        for (const auto& r : j.at("box"))
            ranges.push_back({r.at("name").get<std::string>(), io::from_hex(r.at("lower").get<std::string>()),
                              io::from_hex(r.at("upper").get<std::string>())});
        d.box = ParameterBox(ranges);
        const auto& pts = j.at("unit_points");
        d.points.resize(Eigen::Index(pts.size()), Eigen::Index(d.box.dimension()));
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (pts[k].size() != d.box.dimension()) throw ConfigError(js.string() + ": design row has the wrong length");
            for (std::size_t c = 0; c < pts[k].size(); ++c)
                d.points(Eigen::Index(k), Eigen::Index(c)) = io::from_hex(pts[k][c].get<std::string>());
        }
        d.seed = j.at("seed").get<std::uint64_t>();
        d.iterations = j.at("iterations").get<std::size_t>();
        d.score = j.at("score").get<double>();
        for (const auto& v : j.at("best_trace")) d.best_trace.push_back(v.get<double>());
        return d;
    } catch (const json::exception& e) {
        throw ConfigError(js.string() + ": " + e.what());
    }
}

namespace {

fs::path snapshot_file(const fs::path& dir, std::size_t k)
{
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", k);
    return dir / name;
}

}  // namespace

std::vector<Eigen::MatrixXd> load_snapshots(const fs::path& dir, std::size_t count)
{
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto f = snapshot_file(dir, k);
        if (!fs::exists(f)) throw ConfigError("missing snapshot " + f.string() + " (run snapshot first)");
        out.push_back(load_matrix_csv(f).entries);
    }
    return out;
}

void save_snapshots(const fs::path& dir, const std::vector<Eigen::MatrixXd>& snaps, const SiteConfig& site)
{
    fs::create_directories(dir);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        SourceReceptorMatrix m;
        m.receptor_labels = site.receptor_labels;
        m.source_labels = site.source_labels;
        m.entries = snaps[k];
        save_matrix_csv(snapshot_file(dir, k), m);
    }
}

Measurements observed(const PipelineConfig& cfg)
{
    return load_measurements(cfg.data_path ? *cfg.data_path : cfg.output_dir / "synthetic_w.csv");
}

double resolve_lambda(const PipelineConfig& cfg)
{
    if (cfg.lambda) return *cfg.lambda;
    if (cfg.lambda_from == "synthetic") {
        const json j = read_json(cfg.output_dir / "synthetic.json");
        return io::from_hex(j.at("lambda_hex").get<std::string>());
    }
    const json j = read_json(cfg.output_dir / "lambda.json");
    return io::from_hex(j.at("lambda_star_hex").get<std::string>());
}

SyntheticData synthetic_truth(const PipelineConfig& cfg)
{
    const auto file = cfg.output_dir / "synthetic.json";
    if (fs::exists(file)) {
        const json j = read_json(file);
        SyntheticData s;
        for (const auto& v : j.at("clean_hex")) s.clean.push_back(io::from_hex(v.get<std::string>()));
        for (const auto& v : j.at("w_hex")) s.w.push_back(io::from_hex(v.get<std::string>()));
        s.lambda = io::from_hex(j.at("lambda_hex").get<std::string>());
        s.design_snr = j.at("design_snr").get<double>();
        return s;
    }
    if (cfg.theta_true.empty() || cfg.q_true.empty())
        throw ConfigError("pipeline config: [synthetic] theta and q are required for synthetic data");
    const auto site = load_site(cfg.site_path);
    const auto wind = load_wind_csv(cfg.wind_path);
    return synthesize(site, wind, cfg.design_box, cfg.fixed, cfg.solver, cfg.theta_true, cfg.q_true,
                      cfg.lambda_true.value_or(-1.0), cfg.snr_target, child_seed(cfg.seed, "synthesize"));
}

void write_chain_csv(const fs::path& path, const InversionResult& r, bool full)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "step,accepted,logpost";
    for (const auto& n : r.names) out << ',' << n;
    out << '\n';
    char buf[32];
    auto row = [&](std::size_t step, const Eigen::RowVectorXd& x, double lp) {
        out << step << ',' << int(r.chain.accepted[step]) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", lp);
        out << buf;
        for (Eigen::Index c = 0; c < x.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", x(c));
            out << ',' << buf;
        }
        out << '\n';
    };
    if (full)
        for (std::size_t k = 0; k < r.chain.size(); ++k) row(k, r.chain.states.row(Eigen::Index(k)), r.chain.log_post[k]);
    else
        for (std::size_t k = 0; k < r.retained.indices.size(); ++k)
            row(r.retained.indices[k], r.retained.samples.row(Eigen::Index(k)), r.retained.log_post[k]);
    if (!out) throw ConfigError("error writing " + path.string());
}

DesignSet make_design(const PipelineConfig& cfg, const ParameterBox& box, std::size_t K, std::uint64_t seed)
{
    DesignSet d = particle_swarm_maximin(K, box.dimension(), cfg.pso_iterations, cfg.swarm_size, seed);
    d.box = box;
    return d;
}

}  // namespace detail

using namespace detail;

SyntheticData synthesize(const SiteConfig& site, const WindRecord& wind, const ParameterBox& box,
                         const ModelParams& fixed, const SolverOptions& solver, std::span<const double> theta,
                         std::span<const double> q, double lambda, double snr_target, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(q.size() == site.source_count(), "synthesize: one rate per source required");
    for (double v : q) PLUMECAL_REQUIRE(v >= 0, "synthesize: emission rates must be >= 0");
    const ModelParams params = model_params(box, theta, fixed);
    std::vector<double> rate(q.begin(), q.end());
    for (auto& v : rate) v *= kKgPerSecondPerTonPerYear;
    SyntheticData s;
    s.clean = deposition_measurements(params, rate, site, wind, solver);
    double ss = 0;
    for (double v : s.clean) ss += v * v;
    const double rms = std::sqrt(ss / double(s.clean.size()));
    if (lambda < 0) {
        PLUMECAL_REQUIRE(snr_target > 0, "synthesize: SNR target must be > 0");
        lambda = (rms / snr_target) * (rms / snr_target);
    }
    s.lambda = lambda;
    s.design_snr = lambda > 0 ? rms / std::sqrt(lambda) : std::numeric_limits<double>::infinity();
    s.w = add_noise(s.clean, lambda, seed);
    return s;
}

std::vector<Eigen::MatrixXd> run_snapshots(const SiteConfig& site, const WindRecord& wind, const DesignSet& design,
                                           const ModelParams& fixed, const SolverOptions& solver, std::size_t jobs)
{
    std::vector<Eigen::MatrixXd> out(design.size());
    parallel_for(design.size(), jobs, [&](std::size_t k) {
        const auto theta = design.physical_point(k);
        out[k] = source_receptor_matrix(model_params(design.box, theta, fixed), site, wind, solver).entries;
    });
    return out;
}

InversionProblem make_problem(const PipelineConfig& cfg, const EmulatedMatrix& emulator, std::vector<double> w,
                              double lambda, double tau)
{
    InversionProblem p;
    p.emulator = &emulator;
    p.w = std::move(w);
    p.prior = PriorSpec::build(cfg.prior_box, cfg.q_eng, tau);
    p.noise.lambda = lambda;
    p.rate_unit = kKgPerSecondPerTonPerYear;
    return p;
}

json summary_json(const InversionResult& r, const InversionProblem& problem)
{
    const auto& s = r.summary;
    json cov = json::array();
    for (Eigen::Index a = 0; a < s.covariance.rows(); ++a) {
        json row = json::array();
        for (Eigen::Index b = 0; b < s.covariance.cols(); ++b) row.push_back(s.covariance(a, b));
        cov.push_back(row);
    }
    json estimates = json::object();
    for (std::size_t k = 0; k < s.names.size(); ++k)
        estimates[s.names[k]] = {{"point", s.point[k]}, {"mean", s.mean[k]}, {"radius", s.radius[k]},
                                 {"lower", s.lower[k]}, {"upper", s.upper[k]}};
    return {{"names", r.names},
            {"estimates", estimates},
            {"covariance", cov},
            {"mass", s.mass},
            {"map", r.map},
            {"ml", r.ml},
            {"samples", r.chain.size()},
            {"retained", r.retained.samples.rows()},
            {"acceptance_rate", r.chain.acceptance_rate()},
            {"nonfinite_proposals", r.chain.nonfinite_proposals},
            {"lambda", problem.noise.lambda},
            {"tau", problem.prior.tau},
            {"snr", snr(problem.w, problem.noise.lambda)},
            {"units", {{"q", "ton/yr"}, {"w", "kg"}}}};
}

json cmd_design(const PipelineConfig& cfg)
{
    const auto d = make_design(cfg, cfg.design_box, cfg.design_size, child_seed(cfg.seed, "design"));
    save_design(cfg.output_dir / "design.csv", cfg.output_dir / "design.json", d);
    return {{"command", "design"}, {"K", d.size()}, {"dimension", d.dimension()}, {"score", d.score},
            {"files", {"design.csv", "design.json"}}};
}

json cmd_snapshot(const PipelineConfig& cfg)
{
    const auto site = load_site(cfg.site_path);
    const auto wind = load_wind_csv(cfg.wind_path);
    wind.validate(site.window);
    const auto d = load_design(cfg.output_dir / "design.json");
    const auto snaps = run_snapshots(site, wind, d, cfg.fixed, cfg.solver, cfg.jobs);
    save_snapshots(cfg.output_dir / "snapshots", snaps, site);
    return {{"command", "snapshot"}, {"snapshots", snaps.size()}, {"rows", site.receptor_count()},
            {"cols", site.source_count()}, {"jobs", cfg.jobs}};
}

json cmd_train(const PipelineConfig& cfg)
{
    const auto d = load_design(cfg.output_dir / "design.json");
    const auto snaps = load_snapshots(cfg.output_dir / "snapshots", d.size());
    const auto em = EmulatedMatrix::build(d, snaps, cfg.kernel);
    em.save_json(cfg.output_dir / "emulator.json");
    return {{"command", "train"}, {"entries", em.rows() * em.cols()}, {"kernel", to_string(cfg.kernel)},
            {"warnings", em.warnings()}};
}

json cmd_validate(const PipelineConfig& cfg)
{
    const auto d = load_design(cfg.output_dir / "design.json");
    const auto snaps = load_snapshots(cfg.output_dir / "snapshots", d.size());
    const Eigen::Index rows = snaps.front().rows(), cols = snaps.front().cols();
    const std::size_t entries = std::size_t(rows * cols);
    std::vector<std::vector<LoocvRecord>> recs(entries);
    parallel_for(entries, cfg.jobs, [&](std::size_t e) {
        const Eigen::Index i = Eigen::Index(e) / cols, j = Eigen::Index(e) % cols;
        Eigen::VectorXd v(Eigen::Index(snaps.size()));
        for (std::size_t k = 0; k < snaps.size(); ++k) v(Eigen::Index(k)) = snaps[k](i, j);
        recs[e] = loocv(d.points, v, cfg.kernel);
    });
    io::CsvTable t;
    t.header = {"i", "j", "k", "truth", "mean", "sd", "ok"};
    json per_entry = json::array();
    std::vector<double> r2;
    for (std::size_t e = 0; e < entries; ++e) {
        for (const auto& r : recs[e])
            t.rows.push_back({std::to_string(e / std::size_t(cols)), std::to_string(e % std::size_t(cols)),
                              std::to_string(r.index), io::to_decimal(r.truth), io::to_decimal(r.mean),
                              io::to_decimal(r.sd), r.ok ? "1" : "0"});
        r2.push_back(loocv_r_squared(recs[e]));
        per_entry.push_back({{"i", e / std::size_t(cols)}, {"j", e % std::size_t(cols)}, {"r2", r2.back()}});
    }
    io::write_csv(cfg.output_dir / "loocv.csv", t);
    std::vector<double> sorted = r2;
    const double median = quantile_type7(sorted, 0.5);
    const json digest{{"command", "validate"},
                      {"entries", entries},
                      {"median_r2", median},
                      {"min_r2", *std::min_element(r2.begin(), r2.end())},
                      {"per_entry", per_entry}};
    write_json(cfg.output_dir / "loocv_summary.json", digest);
    return {{"command", "validate"}, {"entries", entries}, {"median_r2", median},
            {"min_r2", *std::min_element(r2.begin(), r2.end())}};
}

json cmd_sensitivity(const PipelineConfig& cfg)
{
    const auto site = load_site(cfg.site_path).with_grid(cfg.sensitivity_grid);
    site.validate();
    const auto wind = load_wind_csv(cfg.wind_path);
    const auto d = make_design(cfg, cfg.sensitivity_box, cfg.sensitivity_design_size,
                               child_seed(cfg.seed, "sensitivity/design"));
    std::vector<double> rate = cfg.q_eng;
    PLUMECAL_REQUIRE(rate.size() == site.source_count(), "sensitivity: prior.q_eng needs one entry per source");
    for (auto& v : rate) v *= kKgPerSecondPerTonPerYear;
    Eigen::MatrixXd values(Eigen::Index(d.size()), Eigen::Index(site.receptor_count()));
    parallel_for(d.size(), cfg.jobs, [&](std::size_t k) {
        const auto theta = d.physical_point(k);
        const auto w = deposition_measurements(model_params(d.box, theta, cfg.fixed), rate, site, wind, cfg.solver);
        for (std::size_t i = 0; i < w.size(); ++i) values(Eigen::Index(k), Eigen::Index(i)) = w[i];
    });
    save_design(cfg.output_dir / "sensitivity_design.csv", cfg.output_dir / "sensitivity_design.json", d);
    const auto r = screen_parameters(d, values, cfg.screening, child_seed(cfg.seed, "sensitivity"));

    io::CsvTable t;
    t.header = {"receptor", "parameter", "kernel", "total_index"};
    for (const auto& rec : r.records)
        t.rows.push_back({site.receptor_labels[rec.receptor], rec.parameter, to_string(rec.kernel),
                          io::to_decimal(rec.total_index)});
    io::write_csv(cfg.output_dir / "sensitivity.csv", t);
    io::CsvTable b;
    b.header = {"receptor", "parameter", "min", "q1", "median", "q3", "max", "whisker_low", "whisker_high"};
    for (std::size_t i = 0; i < r.stats.size(); ++i)
        for (std::size_t p = 0; p < r.stats[i].size(); ++p) {
            const auto& s = r.stats[i][p];
            b.rows.push_back({site.receptor_labels[i], d.box[p].name, io::to_decimal(s.min), io::to_decimal(s.q1),
                              io::to_decimal(s.median), io::to_decimal(s.q3), io::to_decimal(s.max),
                              io::to_decimal(s.whisker_low), io::to_decimal(s.whisker_high)});
        }
    io::write_csv(cfg.output_dir / "sensitivity_boxplots.csv", b);
    json verdict = json::array();
    for (const auto& v : r.verdict)
        verdict.push_back({{"parameter", v.name}, {"median_total", v.median_total}, {"kept", v.kept},
                           {"kept_by_coupling", v.kept_by_coupling}});
    const json digest{{"command", "sensitivity"}, {"verdict", verdict}, {"warnings", r.warnings},
                      {"threshold", cfg.screening.threshold}};
    write_json(cfg.output_dir / "sensitivity.json", digest);
    return digest;
}

json cmd_synthesize(const PipelineConfig& cfg)
{
    if (cfg.theta_true.empty() || cfg.q_true.empty())
        throw ConfigError("pipeline config: [synthetic] theta and q are required");
    const auto site = load_site(cfg.site_path);
    const auto wind = load_wind_csv(cfg.wind_path);
    wind.validate(site.window);
    const auto s = synthesize(site, wind, cfg.design_box, cfg.fixed, cfg.solver, cfg.theta_true, cfg.q_true,
                              cfg.lambda_true.value_or(-1.0), cfg.snr_target, child_seed(cfg.seed, "synthesize"));
    save_measurements(cfg.output_dir / "synthetic_w.csv", {site.receptor_labels, s.w});
    json clean = json::array(), w = json::array();
    for (double v : s.clean) clean.push_back(io::to_hex(v));
    for (double v : s.w) w.push_back(io::to_hex(v));
    const json digest{{"command", "synthesize"},
                      {"theta", cfg.theta_true},
                      {"q", cfg.q_true},
                      {"lambda", s.lambda},
                      {"lambda_hex", io::to_hex(s.lambda)},
                      {"design_snr", s.design_snr},
                      {"clean", s.clean},
                      {"clean_hex", clean},
                      {"w", s.w},
                      {"w_hex", w},
                      {"units", {{"q", "ton/yr"}, {"w", "kg"}}}};
    write_json(cfg.output_dir / "synthetic.json", digest);
    return {{"command", "synthesize"}, {"lambda", s.lambda}, {"design_snr", s.design_snr}, {"w", s.w}};
}

json cmd_calibrate_noise(const PipelineConfig& cfg)
{
    const auto em = EmulatedMatrix::load_json(cfg.output_dir / "emulator.json");
    const auto data = observed(cfg);
    std::vector<double> cands = cfg.lambda_candidates;
    if (cands.empty()) {
        double ss = 0;
        for (double v : data.w) ss += v * v;
        const double ms = ss / double(data.w.size());
        const double hi = std::max(cfg.lambda_snr_span.first, cfg.lambda_snr_span.second);
        const double lo = std::min(cfg.lambda_snr_span.first, cfg.lambda_snr_span.second);
        cands = log_spaced(ms / (hi * hi), ms / (lo * lo), cfg.lambda_count);
    }
    PLUMECAL_REQUIRE(cands.size() >= 3, "calibrate-noise: need at least 3 candidates");
    const auto [mn, mx] = std::minmax_element(cands.begin(), cands.end());
    PLUMECAL_REQUIRE(std::log10(*mx / *mn) >= 2.0 - 1e-12, "calibrate-noise: candidates must span two decades");

    const auto problem = make_problem(cfg, em, data.w, 1.0, cfg.tau);
    const std::uint64_t seed = child_seed(cfg.seed, "calibrate");
    std::vector<JEstimate> evals(cands.size());
    parallel_for(cands.size(), cfg.jobs, [&](std::size_t k) {
        try {
            evals[k] = j_functional(cands[k], problem, cfg.j_options, child_seed(seed, "lambda/" + std::to_string(k)));
        } catch (const NumericalError& e) {
            evals[k].lambda = cands[k];
            evals[k].ok = false;
            evals[k].message = e.what();
        }
    });
    const auto cal = calibrate_lambda(evals);
    io::CsvTable t;
    t.header = {"lambda", "J", "stderr", "ok"};
    for (const auto& e : cal.evaluations)
        t.rows.push_back({io::to_decimal(e.lambda), io::to_decimal(e.value), io::to_decimal(e.stderr_), e.ok ? "1" : "0"});
    io::write_csv(cfg.output_dir / "lambda.csv", t);
    const double s = snr(data.w, cal.lambda_star);
    const json digest{{"command", "calibrate-noise"},
                      {"lambda_star", cal.lambda_star},
                      {"lambda_star_hex", io::to_hex(cal.lambda_star)},
                      {"at_boundary", cal.at_boundary},
                      {"snr", s},
                      {"delta", cfg.j_options.delta},
                      {"curve_lambda", cal.curve_lambda},
                      {"curve_j", cal.curve_j},
                      {"kernel", {{"r1", cal.kernel.r1}, {"r2", cal.kernel.r2}}}};
    write_json(cfg.output_dir / "lambda.json", digest);
    return {{"command", "calibrate-noise"}, {"lambda_star", cal.lambda_star}, {"at_boundary", cal.at_boundary},
            {"snr", s}};
}

json cmd_invert(const PipelineConfig& cfg)
{
    const auto em = EmulatedMatrix::load_json(cfg.output_dir / "emulator.json");
    const auto data = observed(cfg);
    const auto problem = make_problem(cfg, em, data.w, resolve_lambda(cfg), cfg.tau);
    const auto r = run_inversion(problem, cfg.inversion, child_seed(cfg.seed, "invert"));
    write_chain_csv(cfg.output_dir / "chain.csv", r, cfg.write_full_chain);
    json digest = summary_json(r, problem);
    write_json(cfg.output_dir / "summary.json", digest);
    digest["command"] = "invert";
    digest.erase("covariance");
    return digest;
}

json cmd_report(const PipelineConfig& cfg)
{
    const auto& out = cfg.output_dir;
    std::ostringstream md;
    md << "# plumecal run report\n\nconfig: " << cfg.config_path.string() << "  \nseed: " << cfg.seed << "\n";
    json present = json::array();
    auto section = [&](const char* file, const char* title, const std::function<void(const json&)>& body) {
        if (!fs::exists(out / file)) return;
        present.push_back(file);
        md << "\n## " << title << "\n\n";
        body(read_json(out / file));
    };
    section("design.json", "Design", [&](const json& j) {
        md << "K = " << j["unit_points"].size() << ", maximin score " << j["score"].get<double>() << "\n";
    });
    section("loocv_summary.json", "Emulator validation (LOOCV)", [&](const json& j) {
        md << "entries " << j["entries"] << ", median R^2 " << j["median_r2"].get<double>() << ", min R^2 "
           << j["min_r2"].get<double>() << "\n";
    });
    section("sensitivity.json", "Sensitivity screening", [&](const json& j) {
        md << "| parameter | median total index | kept |\n|---|---|---|\n";
        for (const auto& v : j["verdict"])
            md << "| " << v["parameter"].get<std::string>() << " | " << v["median_total"].get<double>() << " | "
               << (v["kept"].get<bool>() ? (v["kept_by_coupling"].get<bool>() ? "yes (coupled)" : "yes") : "no")
               << " |\n";
    });
    section("synthetic.json", "Synthetic data", [&](const json& j) {
        md << "theta " << j["theta"].dump() << ", q " << j["q"].dump() << " ton/yr, lambda "
           << j["lambda"].get<double>() << ", design SNR " << j["design_snr"].get<double>() << "\n";
    });
    section("lambda.json", "Noise calibration", [&](const json& j) {
        md << "lambda* = " << j["lambda_star"].get<double>() << (j["at_boundary"].get<bool>() ? " (at boundary)" : "")
           << ", SNR " << j["snr"].get<double>() << "\n";
    });
    section("summary.json", "Inversion", [&](const json& j) {
        md << "samples " << j["samples"] << ", retained " << j["retained"] << ", acceptance "
           << j["acceptance_rate"].get<double>() << "\n\n| quantity | point | radius | interval |\n|---|---|---|---|\n";
        for (const auto& n : j["names"]) {
            const auto& e = j["estimates"][n.get<std::string>()];
            md << "| " << n.get<std::string>() << " | " << e["point"].get<double>() << " | "
               << e["radius"].get<double>() << " | [" << e["lower"].get<double>() << ", " << e["upper"].get<double>()
               << "] |\n";
        }
    });
    section("study_prior.json", "Prior-spread study", [&](const json& j) {
        md << "q1/q2 radii nondecreasing in tau for " << j["monotone_replicates"] << " of " << j["replicates"]
           << " replicates\n";
    });
    section("study_emulator.json", "Emulator-hierarchy study", [&](const json& j) {
        const auto& sizes = j["sizes"];
        for (std::size_t k = 0; k < sizes.size(); ++k)
            md << "K = " << sizes[k] << ": max KDE distance to the largest design " << j["max_distance"][k].get<double>()
               << "\n\n";
    });
    io::write_text(out / "report.md", md.str());
    return {{"command", "report"}, {"sections", present}, {"file", "report.md"}};
}

}  // namespace plumecal::pipeline
