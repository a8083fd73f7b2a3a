#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plumecal/bayes.hpp"
#include "plumecal/doe.hpp"
#include "plumecal/forward_model.hpp"
#include "plumecal/gp.hpp"
#include "plumecal/noise_cal.hpp"
#include "plumecal/sensitivity.hpp"

namespace plumecal::pipeline {

struct PipelineConfig {
    std::filesystem::path config_path;
    std::filesystem::path site_path;
    std::filesystem::path wind_path;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> data_path;  // measured w; defaults to the synthetic file
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    // forward model
    ParameterBox design_box;   // calibrated parameters (p, z0, L)
    ModelParams fixed;         // z_i, z_cut, kappa
    SolverOptions solver;

    // design + emulator
    std::size_t design_size = 64;
    std::size_t pso_iterations = 200;
    std::size_t swarm_size = 20;
    KernelFamily kernel = KernelFamily::squared_exponential;

    // prior + sampler
    ParameterBox prior_box;
    std::vector<double> q_eng;  // ton/yr
    double tau = 3.0;
    InversionOptions inversion;
    bool write_full_chain = false;

    // noise
    std::optional<double> lambda;           // fixed value, overrides lambda_from
    std::string lambda_from = "calibration";  // or "synthetic"
    std::vector<double> lambda_candidates;  // empty: derived from snr_span and the data
    std::pair<double, double> lambda_snr_span{30.0, 0.3};
    std::size_t lambda_count = 6;
    JOptions j_options;

    // synthetic truth
    std::vector<double> theta_true;
    std::vector<double> q_true;
    double snr_target = 3.0;
    std::optional<double> lambda_true;

    // screening
    ParameterBox sensitivity_box;
    GridResolution sensitivity_grid{12, 12, 12};
    std::size_t sensitivity_design_size = 64;
    ScreeningOptions screening;

    // studies
    std::vector<double> study_taus{2.0, 3.0, 4.0};
    std::size_t study_replicates = 5;
    std::vector<std::size_t> study_sizes{16, 32, 64};

    void validate() const;  // throws ConfigError
};

/// Parses the TOML pipeline file; relative paths resolve against its directory.
PipelineConfig load_config(const std::filesystem::path& path);

struct Measurements {
    std::vector<std::string> labels;
    std::vector<double> w;  // kg
};

Measurements load_measurements(const std::filesystem::path& path);
void save_measurements(const std::filesystem::path& path, const Measurements& m);

/// Model parameters at a calibrated-parameter point, other fields from `fixed`.
ModelParams model_params(const ParameterBox& box, std::span<const double> theta, const ModelParams& fixed);

/// clean + N(0, lambda I); lambda = 0 returns `clean` unchanged.
std::vector<double> add_noise(std::span<const double> clean, double lambda, std::uint64_t seed);

struct SyntheticData {
    std::vector<double> clean;  // A(theta) q, kg
    std::vector<double> w;
    double lambda = 0;
    double design_snr = 0;
};

/// Full solver only; q in ton/yr. lambda < 0 picks it from the SNR target.
SyntheticData synthesize(const SiteConfig& site, const WindRecord& wind, const ParameterBox& box,
                         const ModelParams& fixed, const SolverOptions& solver, std::span<const double> theta,
                         std::span<const double> q, double lambda, double snr_target, std::uint64_t seed);

/// Forward-model runs at every design point, `jobs` at a time.
std::vector<Eigen::MatrixXd> run_snapshots(const SiteConfig& site, const WindRecord& wind, const DesignSet& design,
                                           const ModelParams& fixed, const SolverOptions& solver, std::size_t jobs);

InversionProblem make_problem(const PipelineConfig& cfg, const EmulatedMatrix& emulator, std::vector<double> w,
                              double lambda, double tau);

nlohmann::json summary_json(const InversionResult& r, const InversionProblem& problem);

// Subcommands. Each returns a JSON digest (also printed by the CLI).
nlohmann::json cmd_design(const PipelineConfig& cfg);
nlohmann::json cmd_snapshot(const PipelineConfig& cfg);
nlohmann::json cmd_train(const PipelineConfig& cfg);
nlohmann::json cmd_validate(const PipelineConfig& cfg);
nlohmann::json cmd_sensitivity(const PipelineConfig& cfg);
nlohmann::json cmd_synthesize(const PipelineConfig& cfg);
nlohmann::json cmd_calibrate_noise(const PipelineConfig& cfg);
nlohmann::json cmd_invert(const PipelineConfig& cfg);
nlohmann::json cmd_study_prior(const PipelineConfig& cfg);
nlohmann::json cmd_study_emulator(const PipelineConfig& cfg);
nlohmann::json cmd_report(const PipelineConfig& cfg);

// Study kernels, shared with the acceptance suite.
struct PriorStudyRow {
    std::size_t replicate = 0;
    double tau = 0;
    std::vector<double> prior_q99;
    std::vector<double> radius;
    std::vector<double> point;
};

std::vector<PriorStudyRow> prior_study(const PipelineConfig& cfg, const EmulatedMatrix& emulator,
                                       std::span<const double> clean, double lambda);

/// Max-norm distances between the q-marginal KDEs of each inversion and those of the last one.
struct EmulatorStudy {
    std::vector<std::size_t> sizes;
    std::vector<std::vector<double>> distance;  // [size][source], vs the largest size
    std::vector<double> max_distance;           // over sources
};

EmulatorStudy emulator_study(const std::vector<InversionResult>& runs, const std::vector<std::size_t>& sizes,
                             std::size_t theta_dimension);

/// Gaussian KDE (Silverman bandwidth) evaluated on `grid`.
std::vector<double> kde_density(std::span<const double> samples, std::span<const double> grid);

}  // namespace plumecal::pipeline
