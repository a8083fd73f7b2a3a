#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plumecal/errors.hpp"
#include "plumecal/forward_model.hpp"
#include "plumecal/io.hpp"

namespace plumecal {

// ---------------------------------------------------------------------------
// Grid and field helpers
// ---------------------------------------------------------------------------

Grid Grid::from_site(const SiteConfig& site)
{
    Grid g;
    g.nx = site.grid.nx;
    g.ny = site.grid.ny;
    g.nz = site.grid.nz;
    g.x0 = site.domain.x_min;
    g.y0 = site.domain.y_min;
    g.dx = (site.domain.x_max - site.domain.x_min) / g.nx;
    g.dy = (site.domain.y_max - site.domain.y_min) / g.ny;
    g.dz = site.domain.z_max / g.nz;
    return g;
}

std::size_t Grid::locate(double x, double y, double z) const
{
    auto clamp_index = [](double u, int n) {
        return std::clamp(static_cast<int>(std::floor(u)), 0, n - 1);
    };
    return index(clamp_index((x - x0) / dx, nx), clamp_index((y - y0) / dy, ny), clamp_index(z / dz, nz));
}

double ConcentrationField::total_mass() const
{
    double m = 0;
    for (double c : values) m += c;
    return m * grid.cell_volume();
}

double ConcentrationField::max_value() const
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double ConcentrationField::min_value() const
{
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

void save_field_csv(const std::filesystem::path& path, const ConcentrationField& field)
{
    io::CsvTable t{{"x", "y", "z", "t", "c"}, {}};
    const auto& g = field.grid;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                t.rows.push_back({io::to_decimal(g.x0 + (i + 0.5) * g.dx), io::to_decimal(g.y0 + (j + 0.5) * g.dy),
                                  io::to_decimal(g.z_center(k)), io::to_decimal(field.time),
                                  io::to_decimal(field.values[g.index(i, j, k)])});
    io::write_csv(path, t);
}

Eigen::VectorXd SourceReceptorMatrix::apply(std::span<const double> q) const
{
    PLUMECAL_REQUIRE(q.size() == cols(), "SourceReceptorMatrix::apply: q has wrong length");
    return entries * Eigen::Map<const Eigen::VectorXd>(q.data(), Eigen::Index(q.size()));
}

void save_matrix_csv(const std::filesystem::path& path, const SourceReceptorMatrix& m)
{
    io::CsvTable t;
    t.header.push_back("receptor");
    for (const auto& s : m.source_labels) t.header.push_back(s);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::vector<std::string> row{m.receptor_labels[i]};
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(io::to_decimal(m.entries(Eigen::Index(i), Eigen::Index(j))));
        t.rows.push_back(std::move(row));
    }
    io::write_csv(path, t);
}

SourceReceptorMatrix load_matrix_csv(const std::filesystem::path& path)
{
    const auto t = io::read_csv(path);
    if (t.header.size() < 2 || t.header[0] != "receptor")
        throw ConfigError(path.string() + ": expected header 'receptor,<sources...>'");
    SourceReceptorMatrix m;
    m.source_labels.assign(t.header.begin() + 1, t.header.end());
    m.entries.resize(Eigen::Index(t.rows.size()), Eigen::Index(m.source_labels.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        m.receptor_labels.push_back(t.rows[i][0]);
        for (std::size_t j = 0; j < m.source_labels.size(); ++j)
            m.entries(Eigen::Index(i), Eigen::Index(j)) = io::parse_double(t.rows[i][j + 1], path.string());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Transport stepper
// ---------------------------------------------------------------------------

namespace {

struct Injection {
    std::size_t cell;
    double rate_density;  // kg / m^3 / s
};

/// Discrete operator for one frozen wind state. Horizontal advection and
/// diffusion are explicit; vertical settling, diffusion and the ground/top
/// boundary fluxes are backward Euler, solved column by column.
class FrozenOperator {
public:
    FrozenOperator(const Grid& grid, const ModelParams& params, const SiteConfig& site, double speed,
                   double direction, const SolverOptions& options)
        : g_(grid), closed_(options.closed_box), v_set_(site.v_set), v_dep_(site.v_dep)
    {
        const double bx = -std::sin(direction);
        const double by = -std::cos(direction);
        ux_.resize(std::size_t(g_.nz));
        uy_.resize(std::size_t(g_.nz));
        double rate = 0;
        d_h_ = eddy_diffusivities(params, 0.0, speed, site.z_ref).horizontal;
        for (int k = 0; k < g_.nz; ++k) {
            const double u = wind_profile(params, g_.z_center(k), speed, site.z_ref);
            ux_[std::size_t(k)] = u * bx;
            uy_[std::size_t(k)] = u * by;
            rate = std::max(rate, std::abs(u * bx) / g_.dx + std::abs(u * by) / g_.dy +
                                      2.0 * d_h_ / (g_.dx * g_.dx) + 2.0 * d_h_ / (g_.dy * g_.dy));
        }
        // face k holds the interface between layers k and k+1; the last entry is the top face.
        face_d_.resize(std::size_t(g_.nz));
        for (int k = 0; k < g_.nz; ++k)
            face_d_[std::size_t(k)] = eddy_diffusivities(params, (k + 1) * g_.dz, speed, site.z_ref).vertical;

        admissible_ = rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
        if (options.fixed_step > 0) {
            if (options.fixed_step > admissible_) {
                std::ostringstream msg;
                msg << "explicit step " << options.fixed_step << " s exceeds the stability limit; admissible step is "
                    << admissible_ << " s";
                throw CflViolation(msg.str(), admissible_);
            }
            dt_ = options.fixed_step;
        } else {
            dt_ = std::min(options.cfl_safety * admissible_, options.max_step);
        }
    }

    double step() const { return dt_; }
    double surface_speed() const { return std::hypot(ux_[0], uy_[0]); }

    /// Advance `tracers` fields (stride = cell count) by `dt` <= step().
    void advance(std::vector<double>& fields, std::size_t tracers, const std::vector<std::vector<Injection>>& sources,
                 double dt)
    {
        const std::size_t n = g_.cell_count();
        rhs_.resize(n);
        factor(dt);
        for (std::size_t t = 0; t < tracers; ++t) {
            double* c = fields.data() + t * n;
            explicit_stage(c, dt);
            for (const auto& inj : sources[t]) rhs_[inj.cell] += dt * inj.rate_density;
            for (std::size_t m = 0; m < n; ++m) c[m] += rhs_[m];
            implicit_stage(c);
        }
    }

private:
    void explicit_stage(const double* c, double dt)
    {
        const int nx = g_.nx, ny = g_.ny, nz = g_.nz;
        const double dh = d_h_;
        std::fill(rhs_.begin(), rhs_.end(), 0.0);
        flux_.resize(std::size_t(std::max(nx, 1) + 1));
        for (int k = 0; k < nz; ++k) {
            const double ux = ux_[std::size_t(k)], uy = uy_[std::size_t(k)];
            const double uxp = std::max(ux, 0.0), uxm = std::min(ux, 0.0);
            const double uyp = std::max(uy, 0.0), uym = std::min(uy, 0.0);
            const double cx = dt / g_.dx, cy = dt / g_.dy;
            // x-direction, row by row
            for (int j = 0; j < ny; ++j) {
                const double* row = c + g_.index(0, j, k);
                double* out = rhs_.data() + g_.index(0, j, k);
                flux_[0] = boundary_flux_low(ux, row[0], dh / g_.dx);
                for (int i = 1; i < nx; ++i)
                    flux_[std::size_t(i)] = uxp * row[i - 1] + uxm * row[i] - dh * (row[i] - row[i - 1]) / g_.dx;
                flux_[std::size_t(nx)] = boundary_flux_high(ux, row[nx - 1], dh / g_.dx);
                for (int i = 0; i < nx; ++i) out[i] -= cx * (flux_[std::size_t(i) + 1] - flux_[std::size_t(i)]);
            }
            // y-direction, face row by face row
            const double* plane = c + g_.index(0, 0, k);
            double* out = rhs_.data() + g_.index(0, 0, k);
            for (int j = 0; j <= ny; ++j) {
                const double* below = j > 0 ? plane + std::size_t(j - 1) * nx : nullptr;
                const double* above = j < ny ? plane + std::size_t(j) * nx : nullptr;
                for (int i = 0; i < nx; ++i) {
                    double f;
                    if (below && above)
                        f = uyp * below[i] + uym * above[i] - dh * (above[i] - below[i]) / g_.dy;
                    else if (above)
                        f = boundary_flux_low(uy, above[i], dh / g_.dy);
                    else
                        f = boundary_flux_high(uy, below[i], dh / g_.dy);
                    if (below) out[std::size_t(j - 1) * nx + i] -= cy * f;
                    if (above) out[std::size_t(j) * nx + i] += cy * f;
                }
            }
        }
    }

    // Flux through the low face of the first cell (positive = into the domain).
    double boundary_flux_low(double u, double c, double d_over_h) const
    {
        if (closed_) return 0.0;
        if (u < 0) return u * c;  // outflow, zero gradient
        return -d_over_h * c;     // inflow or calm: zero exterior value
    }

    // Flux through the high face of the last cell (positive = out of the domain).
    double boundary_flux_high(double u, double c, double d_over_h) const
    {
        if (closed_) return 0.0;
        if (u > 0) return u * c;
        return d_over_h * c;
    }

    void factor(double dt)
    {
        if (dt == factored_dt_) return;
        const int nz = g_.nz;
        const double r = dt / g_.dz;
        lower_.assign(std::size_t(nz), 0.0);
        diag_.assign(std::size_t(nz), 1.0);
        upper_.assign(std::size_t(nz), 0.0);
        // interior face k (between k and k+1): F = a_k C_k + b_k C_{k+1}, upward positive
        for (int k = 0; k + 1 < nz; ++k) {
            const double a = face_d_[std::size_t(k)] / g_.dz;
            const double b = -v_set_ - a;
            diag_[std::size_t(k)] += r * a;
            upper_[std::size_t(k)] += r * b;
            diag_[std::size_t(k) + 1] -= r * b;
            lower_[std::size_t(k) + 1] -= r * a;
        }
        if (!closed_) {
            diag_[0] += r * v_dep_;                                             // ground: outward flux v_dep C
            diag_[std::size_t(nz - 1)] += r * face_d_[std::size_t(nz - 1)] / g_.dz;  // top: zero exterior value
        }
        cprime_.resize(std::size_t(nz));
        inv_.resize(std::size_t(nz));
        inv_[0] = 1.0 / diag_[0];
        cprime_[0] = upper_[0] * inv_[0];
        for (int k = 1; k < nz; ++k) {
            const double denom = diag_[std::size_t(k)] - lower_[std::size_t(k)] * cprime_[std::size_t(k) - 1];
            inv_[std::size_t(k)] = 1.0 / denom;
            cprime_[std::size_t(k)] = upper_[std::size_t(k)] * inv_[std::size_t(k)];
        }
        factored_dt_ = dt;
    }

    void implicit_stage(double* c) const
    {
        const std::size_t plane = std::size_t(g_.nx) * g_.ny;
        const int nz = g_.nz;
        for (std::size_t m = 0; m < plane; ++m) c[m] *= inv_[0];
        for (int k = 1; k < nz; ++k) {
            double* cur = c + std::size_t(k) * plane;
            const double* prev = cur - plane;
            const double lo = lower_[std::size_t(k)], inv = inv_[std::size_t(k)];
            for (std::size_t m = 0; m < plane; ++m) cur[m] = (cur[m] - lo * prev[m]) * inv;
        }
        for (int k = nz - 2; k >= 0; --k) {
            double* cur = c + std::size_t(k) * plane;
            const double* next = cur + plane;
            const double cp = cprime_[std::size_t(k)];
            for (std::size_t m = 0; m < plane; ++m) cur[m] -= cp * next[m];
        }
    }

    Grid g_;
    bool closed_;
    double v_set_, v_dep_;
    std::vector<double> ux_, uy_, face_d_;
    double d_h_ = 0;
    double admissible_ = 0;
    double dt_ = 0;
    double factored_dt_ = -1;
    std::vector<double> lower_, diag_, upper_, cprime_, inv_;
    std::vector<double> rhs_, flux_;
};

std::vector<std::vector<Injection>> make_injections(const Grid& g, const SiteConfig& site,
                                                    const std::vector<std::vector<double>>& tracers)
{
    std::vector<std::vector<Injection>> out(tracers.size());
    const double vol = g.cell_volume();
    for (std::size_t t = 0; t < tracers.size(); ++t) {
        PLUMECAL_REQUIRE(tracers[t].size() == site.source_count(), "emission vector length must equal the source count");
        for (std::size_t j = 0; j < site.source_count(); ++j) {
            const double q = tracers[t][j];
            if (!std::isfinite(q) || q < 0) throw ContractViolation("emission rates must be finite and >= 0");
            if (q == 0) continue;
            const auto& s = site.sources[j];
            out[t].push_back({g.locate(s.x, s.y, s.z), q / vol});
        }
    }
    return out;
}

std::vector<std::size_t> receptor_cells(const Grid& g, const SiteConfig& site)
{
    std::vector<std::size_t> cells;
    for (const auto& r : site.receptors) cells.push_back(g.locate(r.x, r.y, 0.0));
    return cells;
}

void check_finite(const std::vector<double>& fields, const Grid& g, double time)
{
    const std::size_t n = g.cell_count();
    for (std::size_t m = 0; m < fields.size(); ++m) {
        if (std::isfinite(fields[m])) continue;
        const std::size_t cell = m % n;
        const int i = int(cell % std::size_t(g.nx));
        const int j = int((cell / std::size_t(g.nx)) % std::size_t(g.ny));
        const int k = int(cell / (std::size_t(g.nx) * g.ny));
        std::ostringstream msg;
        msg << "non-finite concentration in tracer " << m / n << " at cell (" << i << ", " << j << ", " << k
            << ") at t = " << time << " s";
        throw NumericalError(msg.str());
    }
}

void accumulate_exposure(Eigen::MatrixXd& exposure, const std::vector<double>& fields, std::size_t n,
                         const std::vector<std::size_t>& cells, double weight)
{
    for (Eigen::Index t = 0; t < exposure.rows(); ++t)
        for (std::size_t r = 0; r < cells.size(); ++r)
            exposure(t, Eigen::Index(r)) += weight * fields[std::size_t(t) * n + cells[r]];
}

void check_inputs(const ModelParams& params, const SiteConfig& site, const WindRecord& wind)
{
    params.validate();
    site.validate();
    wind.validate(site.window);
}

/// Longest horizontal source-to-receptor distance.
double max_source_receptor_distance(const SiteConfig& site)
{
    double d = 0;
    for (const auto& s : site.sources)
        for (const auto& r : site.receptors) d = std::max(d, std::hypot(s.x - r.x, s.y - r.y));
    return d;
}

/// Integrates the raw wind record over [0, window]; calls `on_step(t, fields)`
/// after every step and stops at each of `stops` exactly.
template <typename OnStep>
void integrate_record(const ModelParams& params, const SiteConfig& site, const WindRecord& wind,
                      const SolverOptions& options, const Grid& g,
                      const std::vector<std::vector<Injection>>& injections, std::vector<double>& fields,
                      std::span<const double> stops, OnStep&& on_step)
{
    const auto& s = wind.samples();
    double t = 0;
    std::size_t next_stop = 0;
    std::size_t steps = 0;
    for (std::size_t k = 0; k < s.size() && t < site.window; ++k) {
        const double seg_end = std::min(k + 1 < s.size() ? s[k + 1].t : site.window, site.window);
        if (seg_end <= t) continue;
        FrozenOperator op(g, params, site, s[k].speed, s[k].direction, options);
        while (t < seg_end) {
            double target = seg_end;
            while (next_stop < stops.size() && stops[next_stop] <= t) ++next_stop;
            if (next_stop < stops.size()) target = std::min(target, stops[next_stop]);
            const double dt = std::min(op.step(), target - t);
            op.advance(fields, injections.size(), injections, dt);
            t = (target - t <= op.step()) ? target : t + dt;
            if (++steps % 64 == 0) check_finite(fields, g, t);
            on_step(t, dt, fields);
        }
    }
    check_finite(fields, g, t);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

std::vector<ConcentrationField> solve_concentration(const ModelParams& params, std::span<const double> q,
                                                    const SiteConfig& site, const WindRecord& wind,
                                                    std::span<const double> output_times,
                                                    const SolverOptions& options)
{
    check_inputs(params, site, wind);
    for (std::size_t k = 0; k < output_times.size(); ++k) {
        PLUMECAL_REQUIRE(output_times[k] >= 0 && output_times[k] <= site.window,
                         "solve_concentration: output times must lie in [0, T]");
        PLUMECAL_REQUIRE(k == 0 || output_times[k] > output_times[k - 1],
                         "solve_concentration: output times must increase");
    }
    const Grid g = Grid::from_site(site);
    const auto injections = make_injections(g, site, {std::vector<double>(q.begin(), q.end())});
    std::vector<double> field(g.cell_count(), 0.0);
    std::vector<ConcentrationField> out;
    std::size_t next = 0;
    auto emit = [&](double t) {
        while (next < output_times.size() && output_times[next] <= t) {
            out.push_back({g, output_times[next], field});
            ++next;
        }
    };
    emit(0.0);
    integrate_record(params, site, wind, options, g, injections, field, output_times,
                     [&](double t, double, const std::vector<double>&) { emit(t); });
    return out;
}

Eigen::MatrixXd ground_exposure(const ModelParams& params, const std::vector<std::vector<double>>& tracers,
                                const SiteConfig& site, const WindRecord& wind, const SolverOptions& options)
{
    check_inputs(params, site, wind);
    PLUMECAL_REQUIRE(!tracers.empty(), "ground_exposure: need at least one tracer");
    const Grid g = Grid::from_site(site);
    const auto injections = make_injections(g, site, tracers);
    const auto cells = receptor_cells(g, site);
    const std::size_t n = g.cell_count();
    Eigen::MatrixXd exposure = Eigen::MatrixXd::Zero(Eigen::Index(tracers.size()), Eigen::Index(cells.size()));
    std::vector<double> fields(n * tracers.size(), 0.0);

    if (options.wind_bins <= 0) {
        integrate_record(params, site, wind, options, g, injections, fields, {},
                         [&](double, double dt, const std::vector<double>& f) {
                             accumulate_exposure(exposure, f, n, cells, dt);
                         });
        return exposure;
    }

    // Quasi-steady wind bins: each bin starts from a clean domain, runs until
    // the plume has swept the receptors a few times, then holds the final
    // ground values for the rest of the bin.
    const double reach = max_source_receptor_distance(site);
    const auto bins = bin_wind(wind, site.window, options.wind_bins);
    double elapsed = 0;
    for (const auto& bin : bins) {
        FrozenOperator op(g, params, site, bin.speed, bin.direction, options);
        std::fill(fields.begin(), fields.end(), 0.0);
        const double transit = reach / std::max(op.surface_speed(), options.min_transit_speed);
        double run = std::min(bin.duration, options.spinup_transits * transit);
        auto steps = static_cast<std::size_t>(std::ceil(run / op.step()));
        steps = std::max<std::size_t>(steps, 1);
        if (steps > options.max_steps_per_bin) {
            steps = options.max_steps_per_bin;
            run = std::min(run, double(steps) * op.step());
        }
        const double dt = run / double(steps);
        for (std::size_t m = 0; m < steps; ++m) {
            op.advance(fields, tracers.size(), injections, dt);
            accumulate_exposure(exposure, fields, n, cells, dt);
            if ((m + 1) % 64 == 0) check_finite(fields, g, elapsed + (m + 1) * dt);
        }
        check_finite(fields, g, elapsed + run);
        if (bin.duration > run) accumulate_exposure(exposure, fields, n, cells, bin.duration - run);
        elapsed += bin.duration;
    }
    return exposure;
}

std::vector<double> deposition_from_exposure(std::span<const double> exposure, double v_set, double jar_area)
{
    std::vector<double> w(exposure.size());
    for (std::size_t i = 0; i < exposure.size(); ++i) w[i] = jar_area * (v_set * exposure[i]);
    return w;
}

std::vector<double> deposition_measurements(const ModelParams& params, std::span<const double> q,
                                            const SiteConfig& site, const WindRecord& wind,
                                            const SolverOptions& options)
{
    const Eigen::MatrixXd e = ground_exposure(params, {std::vector<double>(q.begin(), q.end())}, site, wind, options);
    const Eigen::VectorXd row = e.row(0).transpose();
    return deposition_from_exposure({row.data(), std::size_t(row.size())}, site.v_set, site.jar_area);
}

SourceReceptorMatrix source_receptor_matrix(const ModelParams& params, const SiteConfig& site,
                                            const WindRecord& wind, const SolverOptions& options)
{
    const std::size_t n = site.source_count();
    std::vector<std::vector<double>> unit(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) unit[j][j] = 1.0;
    const Eigen::MatrixXd e = ground_exposure(params, unit, site, wind, options);
    SourceReceptorMatrix m;
    m.receptor_labels = site.receptor_labels;
    m.source_labels = site.source_labels;
    m.entries.resize(Eigen::Index(site.receptor_count()), Eigen::Index(n));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < site.receptor_count(); ++i)
            m.entries(Eigen::Index(i), Eigen::Index(j)) =
                site.jar_area * (site.v_set * e(Eigen::Index(j), Eigen::Index(i)));
    return m;
}

}  // namespace plumecal
