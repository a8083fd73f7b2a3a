#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace plumecal {

struct ParameterRange {
    std::string name;
    double lower = 0;
    double upper = 1;
};

/// Axis-aligned box with an affine map to and from the unit cube.
class ParameterBox {
public:
    ParameterBox() = default;
    explicit ParameterBox(std::vector<ParameterRange> ranges);

    /// The unit cube [0, 1]^m with axes named x1..xm.
    static ParameterBox unit(std::size_t m);

    std::size_t dimension() const { return ranges_.size(); }
    const std::vector<ParameterRange>& ranges() const { return ranges_; }
    const ParameterRange& operator[](std::size_t k) const { return ranges_[k]; }
    std::size_t index_of(const std::string& name) const;  // throws ConfigError

    std::vector<double> to_physical(std::span<const double> unit_point) const;
    std::vector<double> to_unit(std::span<const double> physical_point) const;
    bool contains(std::span<const double> physical_point) const;

private:
    std::vector<ParameterRange> ranges_;
};

/// K design points stored in unit coordinates (rows) plus their physical box.
struct DesignSet {
    Eigen::MatrixXd points;  // K x m, entries in [0, 1]
    ParameterBox box;
    double score = 0;        // maximin score in unit coordinates (0 when K < 2)
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    std::vector<double> best_trace;  // best score after each PSO iteration

    std::size_t size() const { return std::size_t(points.rows()); }
    std::size_t dimension() const { return std::size_t(points.cols()); }
    std::vector<double> unit_point(std::size_t k) const;
    std::vector<double> physical_point(std::size_t k) const;
};

/// One point per stratum [k/K, (k+1)/K) on every axis.
DesignSet latin_hypercube(std::size_t K, std::size_t m, std::uint64_t seed);

/// Minimum pairwise Euclidean distance between rows. Requires K >= 2.
double maximin_score(const Eigen::MatrixXd& points);

struct PsoOptions {
    double inertia = 0.7;
    double cognitive = 1.5;
    double social = 1.5;
    double velocity_clamp = 0.25;
};

/// Global-best particle swarm over whole designs (each particle is a
/// flattened K x m design), seeded with a Latin hypercube. With zero
/// iterations the Latin hypercube initializer is returned unchanged.
DesignSet particle_swarm_maximin(std::size_t K, std::size_t m, std::size_t iterations, std::size_t swarm_size,
                                 std::uint64_t seed, const PsoOptions& options = {});

}  // namespace plumecal
