#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <numbers>

#include "plumecal/forward_model.hpp"

namespace plumecal::testing {

// Small box with one or two sources and a handful of receptors downwind of a westerly.
inline SiteConfig small_site(int nx = 10, int ny = 10, int nz = 6, double window = 3600.0)
{
    SiteConfig s;
    s.name = "unit";
    s.source_labels = {"a", "b"};
    s.sources = {{150.0, 200.0, 15.0}, {130.0, 150.0, 25.0}};
    s.receptor_labels = {"r1", "r2", "r3"};
    s.receptors = {{250.0, 200.0}, {310.0, 220.0}, {290.0, 160.0}};
    s.window = window;
    s.domain = {0.0, 400.0, 0.0, 400.0, 60.0};
    s.grid = {nx, ny, nz};
    return s;
}

// Meteorological convention: 3 pi / 2 blows from the west toward +x.
inline WindRecord westerly(double speed = 3.0)
{
    return WindRecord::steady(speed, 1.5 * std::numbers::pi);
}

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

inline double rel_err(double a, double b)
{
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace plumecal::testing

namespace plumecal::testing {

// Quasi two-dimensional plume (one cell across a very wide y extent) with a
// uniform wind profile and a diffusivity cut-off above the coarsest ground
// cells. Source and receptor sit just below grid lines shared by every
// resolution, so each refinement keeps the same relative cell offsets.
inline double convergence_deposition(int n)
{
    SiteConfig s;
    s.source_labels = {"a"};
    s.sources = {{80.0 - 1e-3, 5e5, 16.0 - 1e-3}};
    s.receptor_labels = {"r"};
    s.receptors = {{240.0 - 1e-3, 5e5}};
    s.window = 3600.0;
    s.domain = {0.0, 400.0, 0.0, 1e6, 80.0};
    s.grid = {n, 1, n / 2};
    ModelParams p;
    p.p = 0.0;
    p.z_cut = 16.0;
    SolverOptions o;
    o.wind_bins = 0;
    return deposition_measurements(p, std::vector<double>{1.0}, s, WindRecord::steady(3.0, 1.5 * std::numbers::pi), o)[0];
}

// Ratio of successive differences over h, h/2, h/4; about 2 for a first-order scheme.
inline double convergence_factor(int n = 20)
{
    const double a = convergence_deposition(n), b = convergence_deposition(2 * n), c = convergence_deposition(4 * n);
    return (a - b) / (b - c);
}

}  // namespace plumecal::testing
