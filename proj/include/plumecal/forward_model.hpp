#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace plumecal {

// ---------------------------------------------------------------------------
// Site and meteorology
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

struct Point2 {
    double x = 0, y = 0;
};

/// Rectangular computational box; the ground is z = 0.
struct DomainBounds {
    double x_min = 0, x_max = 0;
    double y_min = 0, y_max = 0;
    double z_max = 0;
};

struct GridResolution {
    int nx = 0, ny = 0, nz = 0;
};

/// Source/receptor geometry and deposition constants of one site.
struct SiteConfig {
    std::string name;
    std::vector<std::string> source_labels;
    std::vector<Vec3> sources;             // m
    std::vector<std::string> receptor_labels;
    std::vector<Point2> receptors;         // m, ground level
    double jar_area = 0.0206;              // m^2
    double v_set = 0.0027;                 // m/s
    double v_dep = 0.005;                  // m/s
    double z_ref = 10.0;                   // m, anemometer height
    double window = 30.0 * 86400.0;        // s, accumulation window T
    DomainBounds domain;
    GridResolution grid;

    std::size_t source_count() const { return sources.size(); }
    std::size_t receptor_count() const { return receptors.size(); }

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;

    /// Copy with a different grid resolution (used for coarse screening runs).
    SiteConfig with_grid(GridResolution g) const;
};

SiteConfig load_site(const std::filesystem::path& toml_path);

struct WindSample {
    double t = 0;          // s
    double speed = 0;      // m/s at z_ref
    double direction = 0;  // rad, meteorological: direction the wind blows FROM, clockwise from north
};

/// Piecewise-constant wind: sample k holds on [t_k, t_{k+1}), the last one until the window ends.
class WindRecord {
public:
    WindRecord() = default;
    explicit WindRecord(std::vector<WindSample> samples);

    const std::vector<WindSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    /// Throws ConfigError unless times increase strictly, speeds are
    /// nonnegative and finite, and the record starts at or before t = 0.
    void validate(double window) const;

    /// Constant-wind record lasting the whole window.
    static WindRecord steady(double speed, double direction);

private:
    std::vector<WindSample> samples_;
};

WindRecord load_wind_csv(const std::filesystem::path& path);
void save_wind_csv(const std::filesystem::path& path, const WindRecord& wind);

/// One wind-rose sector: duration-weighted mean speed and circular-mean direction.
struct WindBin {
    double speed = 0;
    double direction = 0;
    double duration = 0;
};

/// Compress the record over [0, window] into at most `sectors` direction
/// bins. Empty sectors are dropped; the durations sum to `window`.
std::vector<WindBin> bin_wind(const WindRecord& wind, double window, int sectors);

// ---------------------------------------------------------------------------
// Closures
// ---------------------------------------------------------------------------

/// Nonlinear inputs of the transport operator.
struct ModelParams {
    double p = 0.2;          // wind power-law exponent
    double z0 = 0.05;        // roughness length, m
    double L = -10.0;        // Monin-Obukhov length, m
    double z_i = 100.0;      // mixing layer height, m
    double z_cut = 2.0;      // diffusivity cut-off height, m
    double kappa = 0.4;      // von Karman constant

    /// Structural invariants (z_i > 0, 0 < z_cut < z_i, z0 > 0, L < 0, finite).
    void validate() const;
    /// Additionally checks p in [0, 0.6], z0 in (0, 3], L in [-600, 0).
    bool in_reference_ranges() const;
};

/// v_r (z / z_ref)^p, with z clamped from below at z_cut.
double wind_profile(const ModelParams& params, double z, double v_r, double z_ref);

/// Monin-Obukhov stability correction.
double stability_phi(double s);

/// kappa v_r / ln(z_ref / z0). Throws ContractViolation when z_ref <= z0.
double friction_velocity(const ModelParams& params, double v_r, double z_ref);

struct Diffusivities {
    double horizontal = 0;  // D11 = D22
    double vertical = 0;    // D33
};

Diffusivities eddy_diffusivities(const ModelParams& params, double z, double v_r, double z_ref);

// ---------------------------------------------------------------------------
// Finite-volume solver
// ---------------------------------------------------------------------------

/// Cell-centred structured grid over the site domain.
struct Grid {
    int nx = 0, ny = 0, nz = 0;
    double x0 = 0, y0 = 0;
    double dx = 0, dy = 0, dz = 0;

    static Grid from_site(const SiteConfig& site);

    std::size_t cell_count() const { return std::size_t(nx) * ny * nz; }
    std::size_t index(int i, int j, int k) const
    {
        return (std::size_t(k) * ny + j) * nx + i;
    }
    double cell_volume() const { return dx * dy * dz; }
    double z_center(int k) const { return (k + 0.5) * dz; }
    /// Index of the cell containing (x, y, z); the point must lie inside the domain.
    std::size_t locate(double x, double y, double z) const;
};

struct ConcentrationField {
    Grid grid;
    double time = 0;             // s
    std::vector<double> values;  // kg/m^3, Grid::index layout

    double total_mass() const;
    double max_value() const;
    double min_value() const;
};

void save_field_csv(const std::filesystem::path& path, const ConcentrationField& field);

struct SolverOptions {
    double cfl_safety = 0.9;
    /// All faces reflecting and no ground deposition; used for mass-budget checks.
    bool closed_box = false;
    /// Direction sectors used to compress the wind record; 0 integrates the raw record.
    int wind_bins = 16;
    /// Spin-up per bin, in units of the slowest source-to-receptor transit time.
    double spinup_transits = 3.0;
    /// Floor on the transport speed used to size the spin-up.
    double min_transit_speed = 0.5;
    std::size_t max_steps_per_bin = 20000;
    /// Upper bound on the step when advection and diffusion both vanish.
    double max_step = 600.0;
    /// If > 0, force this step and fail when it exceeds the stability limit.
    double fixed_step = 0.0;
};

/// d x n map from emission rates (kg/s) to jar depositions (kg).
struct SourceReceptorMatrix {
    std::vector<std::string> receptor_labels;
    std::vector<std::string> source_labels;
    Eigen::MatrixXd entries;

    std::size_t rows() const { return std::size_t(entries.rows()); }
    std::size_t cols() const { return std::size_t(entries.cols()); }
    Eigen::VectorXd apply(std::span<const double> q) const;
};

void save_matrix_csv(const std::filesystem::path& path, const SourceReceptorMatrix& m);
SourceReceptorMatrix load_matrix_csv(const std::filesystem::path& path);

/// Concentration snapshots at the requested output times (ascending, within
/// the window) from integrating the raw wind record with zero initial state.
std::vector<ConcentrationField> solve_concentration(const ModelParams& params,
                                                    std::span<const double> q,
                                                    const SiteConfig& site,
                                                    const WindRecord& wind,
                                                    std::span<const double> output_times,
                                                    const SolverOptions& options = {});

/// Time integrals of ground-cell concentration at each receptor
/// (kg s / m^3), one row per tracer. Tracer t carries emission rates
/// `tracers[t]` (kg/s per source). All tracers share one operator sequence.
Eigen::MatrixXd ground_exposure(const ModelParams& params,
                                const std::vector<std::vector<double>>& tracers,
                                const SiteConfig& site,
                                const WindRecord& wind,
                                const SolverOptions& options = {});

/// w_i = jar_area * v_set * exposure_i.
std::vector<double> deposition_from_exposure(std::span<const double> exposure,
                                             double v_set,
                                             double jar_area);

std::vector<double> deposition_measurements(const ModelParams& params,
                                            std::span<const double> q,
                                            const SiteConfig& site,
                                            const WindRecord& wind,
                                            const SolverOptions& options = {});

/// Column j is the deposition for a unit rate at source j alone.
SourceReceptorMatrix source_receptor_matrix(const ModelParams& params,
                                            const SiteConfig& site,
                                            const WindRecord& wind,
                                            const SolverOptions& options = {});

/// kg/s per ton/yr.
inline constexpr double kKgPerSecondPerTonPerYear = 1000.0 / (365.25 * 86400.0);

}  // namespace plumecal
