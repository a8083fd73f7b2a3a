#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "plumecal/doe.hpp"
#include "plumecal/errors.hpp"
#include "plumecal/seeds.hpp"

namespace plumecal {

ParameterBox::ParameterBox(std::vector<ParameterRange> ranges) : ranges_(std::move(ranges))
{
    for (const auto& r : ranges_)
        if (!(std::isfinite(r.lower) && std::isfinite(r.upper) && r.lower < r.upper))
            throw ConfigError("parameter range for '" + r.name + "' must be finite with lower < upper");
}

ParameterBox ParameterBox::unit(std::size_t m)
{
    std::vector<ParameterRange> r;
    for (std::size_t k = 0; k < m; ++k) r.push_back({"x" + std::to_string(k + 1), 0.0, 1.0});
    return ParameterBox(std::move(r));
}

std::size_t ParameterBox::index_of(const std::string& name) const
{
    for (std::size_t k = 0; k < ranges_.size(); ++k)
        if (ranges_[k].name == name) return k;
    throw ConfigError("parameter '" + name + "' is not in the box");
}

std::vector<double> ParameterBox::to_physical(std::span<const double> u) const
{
    PLUMECAL_REQUIRE(u.size() == ranges_.size(), "ParameterBox: dimension mismatch");
    std::vector<double> x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) x[k] = ranges_[k].lower + u[k] * (ranges_[k].upper - ranges_[k].lower);
    return x;
}

std::vector<double> ParameterBox::to_unit(std::span<const double> x) const
{
    PLUMECAL_REQUIRE(x.size() == ranges_.size(), "ParameterBox: dimension mismatch");
    std::vector<double> u(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) u[k] = (x[k] - ranges_[k].lower) / (ranges_[k].upper - ranges_[k].lower);
    return u;
}

bool ParameterBox::contains(std::span<const double> x) const
{
    if (x.size() != ranges_.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!(x[k] >= ranges_[k].lower && x[k] <= ranges_[k].upper)) return false;
    return true;
}

std::vector<double> DesignSet::unit_point(std::size_t k) const
{
    std::vector<double> u(dimension());
    for (std::size_t c = 0; c < dimension(); ++c) u[c] = points(Eigen::Index(k), Eigen::Index(c));
    return u;
}

std::vector<double> DesignSet::physical_point(std::size_t k) const
{
    return box.to_physical(unit_point(k));
}

DesignSet latin_hypercube(std::size_t K, std::size_t m, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(K >= 1 && m >= 1, "latin_hypercube: need K >= 1 and m >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DesignSet d;
    d.points.resize(Eigen::Index(K), Eigen::Index(m));
    d.box = ParameterBox::unit(m);
    d.seed = seed;
    std::vector<std::size_t> perm(K);
    for (std::size_t c = 0; c < m; ++c) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t k = 0; k < K; ++k) {
            // stay strictly below the upper stratum edge
            const double u = (double(perm[k]) + unif(rng)) / double(K);
            d.points(Eigen::Index(k), Eigen::Index(c)) = std::min(u, std::nextafter((perm[k] + 1.0) / double(K), 0.0));
        }
    }
    d.score = K >= 2 ? maximin_score(d.points) : 0.0;
    return d;
}

double maximin_score(const Eigen::MatrixXd& points)
{
    const Eigen::Index K = points.rows();
    PLUMECAL_REQUIRE(K >= 2, "maximin_score: need at least two points");
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < K; ++a)
        for (Eigen::Index b = a + 1; b < K; ++b) {
            double s = 0;
            for (Eigen::Index c = 0; c < points.cols(); ++c) {
                const double d = points(a, c) - points(b, c);
                s += d * d;
            }
            best = std::min(best, s);
        }
    return std::sqrt(best);
}

namespace {

double flat_score(const std::vector<double>& x, std::size_t K, std::size_t m)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = a + 1; b < K; ++b) {
            double s = 0;
            for (std::size_t c = 0; c < m; ++c) {
                const double d = x[a * m + c] - x[b * m + c];
                s += d * d;
            }
            best = std::min(best, s);
        }
    return std::sqrt(best);
}

std::vector<double> flatten(const Eigen::MatrixXd& p)
{
    std::vector<double> x(std::size_t(p.size()));
    for (Eigen::Index a = 0; a < p.rows(); ++a)
        for (Eigen::Index c = 0; c < p.cols(); ++c) x[std::size_t(a * p.cols() + c)] = p(a, c);
    return x;
}

}  // namespace

DesignSet particle_swarm_maximin(std::size_t K, std::size_t m, std::size_t iterations, std::size_t swarm_size,
                                 std::uint64_t seed, const PsoOptions& opt)
{
    PLUMECAL_REQUIRE(swarm_size >= 1, "particle_swarm_maximin: swarm_size must be >= 1");
    DesignSet init = latin_hypercube(K, m, child_seed(seed, "pso/particle/0"));
    init.seed = seed;
    if (iterations == 0 || K < 2) return init;

    const std::size_t dim = K * m;
    std::mt19937_64 rng(child_seed(seed, "pso/motion"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<std::vector<double>> pos(swarm_size), vel(swarm_size, std::vector<double>(dim)), pbest(swarm_size);
    std::vector<double> pbest_score(swarm_size);
    for (std::size_t s = 0; s < swarm_size; ++s) {
        pos[s] = s == 0 ? flatten(init.points)
                        : flatten(latin_hypercube(K, m, child_seed(seed, "pso/particle/" + std::to_string(s))).points);
        for (auto& v : vel[s]) v = opt.velocity_clamp * (2.0 * unif(rng) - 1.0);
        pbest[s] = pos[s];
        pbest_score[s] = flat_score(pos[s], K, m);
    }
    // first encountered wins ties
    std::size_t g = 0;
    for (std::size_t s = 1; s < swarm_size; ++s)
        if (pbest_score[s] > pbest_score[g]) g = s;
    std::vector<double> gbest = pbest[g];
    double gbest_score = pbest_score[g];

    DesignSet out;
    out.best_trace.reserve(iterations);
    std::vector<double> scores(swarm_size);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t s = 0; s < swarm_size; ++s) {
            auto& x = pos[s];
            auto& v = vel[s];
            for (std::size_t c = 0; c < dim; ++c) {
                const double r1 = unif(rng), r2 = unif(rng);
                double nv = opt.inertia * v[c] + opt.cognitive * r1 * (pbest[s][c] - x[c]) +
                            opt.social * r2 * (gbest[c] - x[c]);
                nv = std::clamp(nv, -opt.velocity_clamp, opt.velocity_clamp);
                double nx = x[c] + nv;
                if (nx < 0.0) {
                    nx = 0.0;
                    nv = 0.0;
                } else if (nx > 1.0) {
                    nx = 1.0;
                    nv = 0.0;
                }
                v[c] = nv;
                x[c] = nx;
            }
        }
        // fitness evaluations are independent; the reduction below is in particle order
        for (std::size_t s = 0; s < swarm_size; ++s) scores[s] = flat_score(pos[s], K, m);
        for (std::size_t s = 0; s < swarm_size; ++s) {
            if (scores[s] > pbest_score[s]) {
                pbest_score[s] = scores[s];
                pbest[s] = pos[s];
            }
            if (scores[s] > gbest_score) {
                gbest_score = scores[s];
                gbest = pos[s];
            }
        }
        out.best_trace.push_back(gbest_score);
    }
    out.points.resize(Eigen::Index(K), Eigen::Index(m));
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t c = 0; c < m; ++c) out.points(Eigen::Index(a), Eigen::Index(c)) = gbest[a * m + c];
    out.box = init.box;
    out.score = maximin_score(out.points);
    out.seed = seed;
    out.iterations = iterations;
    return out;
}

}  // namespace plumecal
