#include <algorithm>
#include <cmath>
#include <random>

#include <toml.hpp>

#include "plumecal/errors.hpp"
#include "plumecal/io.hpp"
#include "plumecal/pipeline.hpp"

namespace plumecal::pipeline {

namespace {

using View = toml::node_view<const toml::node>;

const char* const kModelNames[] = {"p", "z0", "L", "z_i", "z_cut"};

std::string where(const std::string& key) { return "pipeline config: '" + key + "'"; }

double number(View v, const std::string& key, double fallback)
{
    if (!v) return fallback;
    if (auto d = v.value<double>()) return *d;
    throw ConfigError(where(key) + " must be a number");
}

std::size_t count(View v, const std::string& key, std::size_t fallback)
{
    if (!v) return fallback;
    auto i = v.value<std::int64_t>();
    if (!i || *i < 0) throw ConfigError(where(key) + " must be a nonnegative integer");
    return std::size_t(*i);
}

std::vector<double> numbers(View v, const std::string& key)
{
    const auto* arr = v.as_array();
    if (!arr) throw ConfigError(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
        auto d = e.value<double>();
        if (!d) throw ConfigError(where(key) + " must hold numbers only");
        out.push_back(*d);
    }
    return out;
}

std::pair<double, double> interval(View v, const std::string& key)
{
    const auto r = numbers(v, key);
    if (r.size() != 2 || !(r[0] < r[1])) throw ConfigError(where(key) + " must be [lower, upper] with lower < upper");
    return {r[0], r[1]};
}

// keys of a table in canonical model order
ParameterBox box_from(View table, const std::string& key, bool allow_extra)
{
    const auto* t = table.as_table();
    if (!t) throw ConfigError(where(key) + " table is missing");
    std::vector<ParameterRange> ranges;
    for (const char* name : kModelNames) {
        View v = table[name];
        if (!v) continue;
        auto [lo, hi] = interval(v, key + "." + name);
        ranges.push_back({name, lo, hi});
    }
    for (const auto& [k, _] : *t) {
        const auto n = std::string(k.str());
        const bool known = std::find(std::begin(kModelNames), std::end(kModelNames), n) != std::end(kModelNames);
        if (!known && !allow_extra) throw ConfigError(where(key + "." + n) + " is not a model parameter");
    }
    if (ranges.empty()) throw ConfigError(where(key) + " defines no parameter ranges");
    return ParameterBox(ranges);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

ModelParams model_params(const ParameterBox& box, std::span<const double> theta, const ModelParams& fixed)
{
    PLUMECAL_REQUIRE(theta.size() == box.dimension(), "model_params: theta has the wrong dimension");
    ModelParams p = fixed;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const auto& n = box[k].name;
        if (n == "p")
            p.p = theta[k];
        else if (n == "z0")
            p.z0 = theta[k];
        else if (n == "L")
            p.L = theta[k];
        else if (n == "z_i")
            p.z_i = theta[k];
        else if (n == "z_cut")
            p.z_cut = theta[k];
        else
            throw ContractViolation("model_params: unknown parameter '" + n + "'");
    }
    return p;
}

void PipelineConfig::validate() const
{
    if (!std::filesystem::exists(site_path)) throw ConfigError("site file not found: " + site_path.string());
    if (!std::filesystem::exists(wind_path)) throw ConfigError("wind file not found: " + wind_path.string());
    if (data_path && !std::filesystem::exists(*data_path))
        throw ConfigError("measurement file not found: " + data_path->string());
    if (design_size < 8) throw ConfigError("pipeline config: design.size must be >= 8 for emulation");
    if (swarm_size < 1) throw ConfigError("pipeline config: design.swarm must be >= 1");
    if (jobs < 1) throw ConfigError("pipeline config: jobs must be >= 1");
    if (q_eng.empty()) throw ConfigError("pipeline config: prior.q_eng is empty");
    for (double q : q_eng)
        if (!(q > 0)) throw ConfigError("pipeline config: prior.q_eng entries must be > 0");
    if (!(tau > 1)) throw ConfigError("pipeline config: prior.tau must be > 1");
    if (prior_box.dimension() != design_box.dimension())
        throw ConfigError("pipeline config: prior and parameter boxes name different parameters");
    for (std::size_t k = 0; k < prior_box.dimension(); ++k)
        if (prior_box[k].name != design_box[k].name)
            throw ConfigError("pipeline config: prior and parameter boxes name different parameters");
    if (inversion.mcmc.N < 2) throw ConfigError("pipeline config: mcmc.samples must be >= 2");
    if (!(inversion.burn_in_fraction >= 0 && inversion.burn_in_fraction < 1))
        throw ConfigError("pipeline config: mcmc.burn_in must be in [0, 1)");
    if (inversion.thinning < 1) throw ConfigError("pipeline config: mcmc.thinning must be >= 1");
    if (!(inversion.mass > 0 && inversion.mass < 1)) throw ConfigError("pipeline config: mcmc.mass must be in (0, 1)");
    if (lambda && !(*lambda > 0)) throw ConfigError("pipeline config: noise.lambda must be > 0");
    if (lambda_from != "calibration" && lambda_from != "synthetic")
        throw ConfigError("pipeline config: noise.lambda_from must be 'calibration' or 'synthetic'");
    if (!(j_options.delta >= 0 && j_options.delta <= 1)) throw ConfigError("pipeline config: noise.delta must be in [0, 1]");
    if (!theta_true.empty() && theta_true.size() != design_box.dimension())
        throw ConfigError("pipeline config: synthetic.theta has the wrong length");
    if (!q_true.empty() && q_true.size() != q_eng.size())
        throw ConfigError("pipeline config: synthetic.q must have one entry per source");
    for (double q : q_true)
        if (!(q >= 0)) throw ConfigError("pipeline config: synthetic.q entries must be >= 0");
    if (!theta_true.empty() && !prior_box.contains(theta_true))
        throw ConfigError("pipeline config: synthetic.theta lies outside the prior box");
    if (!(snr_target > 0)) throw ConfigError("pipeline config: synthetic.snr must be > 0");
    if (lambda_true && !(*lambda_true >= 0)) throw ConfigError("pipeline config: synthetic.lambda must be >= 0");
    if (sensitivity_design_size < 8) throw ConfigError("pipeline config: sensitivity.design_size must be >= 8");
    for (double t : study_taus)
        if (!(t > 1)) throw ConfigError("pipeline config: studies.tau entries must be > 1");
    for (std::size_t k : study_sizes)
        if (k < 8) throw ConfigError("pipeline config: studies.sizes entries must be >= 8");
    if (study_sizes.size() < 2) throw ConfigError("pipeline config: studies.sizes needs at least two sizes");
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    toml::table tbl;
    try {
        tbl = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError("pipeline config " + path.string() + ": " + std::string(e.description()));
    }
    const View root{tbl};
    const auto base = std::filesystem::absolute(path).parent_path();
    PipelineConfig c;
    c.config_path = std::filesystem::absolute(path);

    auto str = [&](View v, const std::string& key) {
        auto s = v.value<std::string>();
        if (!s) throw ConfigError(where(key) + " must be a string");
        return *s;
    };
    if (!root["seed"]) throw ConfigError("pipeline config: 'seed' is required (no implicit seeding)");
    auto seed = root["seed"].value<std::int64_t>();
    if (!seed || *seed < 0) throw ConfigError(where("seed") + " must be a nonnegative integer");
    c.seed = std::uint64_t(*seed);
    c.site_path = resolve(base, str(root["site"], "site"));
    c.wind_path = resolve(base, str(root["wind"], "wind"));
    c.output_dir = resolve(base, root["output_dir"] ? str(root["output_dir"], "output_dir") : std::string("out"));
    if (root["data"]) c.data_path = resolve(base, str(root["data"], "data"));

    const View model = root["model"];
    c.fixed.z_i = number(model["z_i"], "model.z_i", c.fixed.z_i);
    c.fixed.z_cut = number(model["z_cut"], "model.z_cut", c.fixed.z_cut);
    c.fixed.kappa = number(model["kappa"], "model.kappa", c.fixed.kappa);
    c.solver.wind_bins = int(count(model["wind_bins"], "model.wind_bins", std::size_t(c.solver.wind_bins)));

    c.design_box = box_from(root["parameters"], "parameters", false);

    const View design = root["design"];
    c.design_size = count(design["size"], "design.size", c.design_size);
    c.pso_iterations = count(design["pso_iterations"], "design.pso_iterations", c.pso_iterations);
    c.swarm_size = count(design["swarm"], "design.swarm", c.swarm_size);
    if (root["emulator"]["kernel"]) c.kernel = kernel_family_from_string(str(root["emulator"]["kernel"], "emulator.kernel"));

    const View prior = root["prior"];
    if (!prior["q_eng"]) throw ConfigError(where("prior.q_eng") + " is required");
    c.q_eng = numbers(prior["q_eng"], "prior.q_eng");
    c.tau = number(prior["tau"], "prior.tau", c.tau);
    c.prior_box = box_from(prior, "prior", true);

    const View mcmc = root["mcmc"];
    auto& mh = c.inversion.mcmc;
    mh.N = count(mcmc["samples"], "mcmc.samples", mh.N);
    mh.beta = number(mcmc["beta"], "mcmc.beta", mh.beta);
    mh.gamma1 = number(mcmc["gamma1"], "mcmc.gamma1", mh.gamma1);
    mh.gamma2 = number(mcmc["gamma2"], "mcmc.gamma2", mh.gamma2);
    mh.gamma3 = number(mcmc["gamma3"], "mcmc.gamma3", mh.gamma3);
    c.inversion.burn_in_fraction = number(mcmc["burn_in"], "mcmc.burn_in", c.inversion.burn_in_fraction);
    c.inversion.thinning = count(mcmc["thinning"], "mcmc.thinning", c.inversion.thinning);
    c.inversion.mass = number(mcmc["mass"], "mcmc.mass", c.inversion.mass);
    c.write_full_chain = mcmc["full_chain"].value_or(false);

    const View noise = root["noise"];
    if (noise["lambda"]) c.lambda = number(noise["lambda"], "noise.lambda", 0.0);
    if (noise["lambda_from"]) c.lambda_from = str(noise["lambda_from"], "noise.lambda_from");
    if (noise["candidates"]) {
        c.lambda_candidates = numbers(noise["candidates"], "noise.candidates");
        for (double l : c.lambda_candidates)
            if (!(l > 0)) throw ConfigError(where("noise.candidates") + " entries must be > 0");
    }
    c.j_options.delta = number(noise["delta"], "noise.delta", c.j_options.delta);
    c.j_options.inversion.mcmc = mh;
    c.j_options.inversion.mcmc.N = count(noise["samples"], "noise.samples", 100000);
    c.j_options.inversion.burn_in_fraction = c.inversion.burn_in_fraction;
    c.j_options.inversion.thinning = c.inversion.thinning;
    c.j_options.batches = count(noise["batches"], "noise.batches", c.j_options.batches);

    const View syn = root["synthetic"];
    if (syn["theta"]) c.theta_true = numbers(syn["theta"], "synthetic.theta");
    if (syn["q"]) c.q_true = numbers(syn["q"], "synthetic.q");
    c.snr_target = number(syn["snr"], "synthetic.snr", c.snr_target);
    if (syn["lambda"]) c.lambda_true = number(syn["lambda"], "synthetic.lambda", 0.0);

    const View sens = root["sensitivity"];
    {
        std::vector<ParameterRange> ranges = c.design_box.ranges();
        for (const char* name : {"z_i", "z_cut"}) {
            const bool present = std::any_of(ranges.begin(), ranges.end(), [&](const auto& r) { return r.name == name; });
            if (present) continue;
            const std::string key = std::string("sensitivity.") + name;
            auto [lo, hi] = sens[name] ? interval(sens[name], key)
                                       : (std::string(name) == "z_i" ? std::pair{50.0, 500.0} : std::pair{0.5, 5.0});
            ranges.push_back({name, lo, hi});
        }
        c.sensitivity_box = ParameterBox(ranges);
    }
    if (sens["grid"]) {
        const auto g = numbers(sens["grid"], "sensitivity.grid");
        if (g.size() != 3) throw ConfigError(where("sensitivity.grid") + " must be [nx, ny, nz]");
        c.sensitivity_grid = {int(g[0]), int(g[1]), int(g[2])};
    }
    c.sensitivity_design_size = count(sens["design_size"], "sensitivity.design_size", c.sensitivity_design_size);
    c.screening.base_samples = count(sens["samples"], "sensitivity.samples", c.screening.base_samples);
    c.screening.threshold = number(sens["threshold"], "sensitivity.threshold", c.screening.threshold);

    const View st = root["studies"];
    if (st["tau"]) c.study_taus = numbers(st["tau"], "studies.tau");
    c.study_replicates = count(st["replicates"], "studies.replicates", c.study_replicates);
    if (st["sizes"]) {
        c.study_sizes.clear();
        for (double k : numbers(st["sizes"], "studies.sizes")) c.study_sizes.push_back(std::size_t(k));
    }
    if (noise["snr_span"]) {
        const auto s = numbers(noise["snr_span"], "noise.snr_span");
        if (s.size() != 2 || !(s[0] > 0 && s[1] > 0) || s[0] == s[1])
            throw ConfigError(where("noise.snr_span") + " must be two distinct positive numbers");
        c.lambda_snr_span = {s[0], s[1]};
    }
    c.lambda_count = count(noise["count"], "noise.count", c.lambda_count);
    if (c.lambda_candidates.empty() && c.lambda_count < 3) throw ConfigError(where("noise.count") + " must be >= 3");
    c.validate();
    return c;
}

Measurements load_measurements(const std::filesystem::path& path)
{
    const auto t = io::read_csv(path);
    const auto cl = t.column("receptor"), cw = t.column("w_kg");
    Measurements m;
    for (const auto& r : t.rows) {
        if (r.size() <= std::max(cl, cw)) throw ConfigError("measurement file " + path.string() + ": short row");
        m.labels.push_back(r[cl]);
        const double w = io::parse_double(r[cw], "measurement file " + path.string());
        if (!std::isfinite(w)) throw ConfigError("measurement file " + path.string() + ": non-finite value");
        m.w.push_back(w);
    }
    if (m.w.empty()) throw ConfigError("measurement file " + path.string() + ": no rows");
    return m;
}

void save_measurements(const std::filesystem::path& path, const Measurements& m)
{
    io::CsvTable t;
    t.header = {"receptor", "w_kg"};
    for (std::size_t i = 0; i < m.w.size(); ++i) t.rows.push_back({m.labels[i], io::to_decimal(m.w[i])});
    io::write_csv(path, t);
}

std::vector<double> add_noise(std::span<const double> clean, double lambda, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(lambda >= 0 && std::isfinite(lambda), "add_noise: lambda must be >= 0");
    std::vector<double> w(clean.begin(), clean.end());
    if (lambda == 0) return w;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, std::sqrt(lambda));
    for (auto& v : w) v += n(rng);
    return w;
}

}  // namespace plumecal::pipeline
