#include <cmath>
#include <random>

#include "plumecal/bayes.hpp"
#include "plumecal/errors.hpp"

namespace plumecal {

double PosteriorChain::acceptance_rate() const
{
    if (accepted.size() < 2) return 0.0;
    std::size_t n = 0;
    for (std::size_t k = 1; k < accepted.size(); ++k) n += accepted[k];
    return double(n) / double(accepted.size() - 1);
}

PosteriorChain adaptive_mh(const LogDensity& log_post, std::span<const double> init, const AdaptiveMhParams& params,
                           std::uint64_t seed)
{
    const std::size_t dim = init.size();
    PLUMECAL_REQUIRE(dim >= 1, "adaptive_mh: empty initial state");
    PLUMECAL_REQUIRE(params.N >= 1, "adaptive_mh: N must be >= 1");
    PLUMECAL_REQUIRE(params.beta >= 0 && params.beta <= 1, "adaptive_mh: beta must be in [0, 1]");
    PLUMECAL_REQUIRE(params.gamma1 > 0 && params.gamma2 > 0 && params.gamma3 > 0,
                     "adaptive_mh: gamma parameters must be > 0");

    const Eigen::Index D = Eigen::Index(dim);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(init.data(), D);
    double lp = log_post(init);
    PLUMECAL_REQUIRE(std::isfinite(lp), "adaptive_mh: initial state has zero or non-finite posterior density");

    PosteriorChain chain;
    chain.states.resize(Eigen::Index(params.N), D);
    chain.accepted.assign(params.N, 0);
    chain.log_post.assign(params.N, 0.0);
    chain.states.row(0) = x.transpose();
    chain.accepted[0] = 1;
    chain.log_post[0] = lp;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Welford accumulators over the states stored so far
    Eigen::VectorXd mean = x;
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(D, D);
    std::size_t count = 1;

    const double s1 = std::sqrt(params.gamma1 / double(dim));
    const double s2 = std::sqrt(params.gamma2 / double(dim));
    const double s3 = std::sqrt(params.gamma3 / double(dim));
    Eigen::VectorXd z(D), u(D), y(D);
    Eigen::MatrixXd cov(D, D);
    Eigen::LLT<Eigen::MatrixXd> llt(D);

    for (std::size_t j = 1; j < params.N; ++j) {
        for (Eigen::Index k = 0; k < D; ++k) z(k) = normal(rng);
        if (j <= 2 * dim) {
            u = s1 * z;
        } else {
            const double pick = unif(rng);
            if (pick >= params.beta) {
                cov = m2 / double(count - 1);
                cov.diagonal().array() += 1e-10;
                llt.compute(cov);
                if (llt.info() == Eigen::Success)
                    {
                    u.noalias() = llt.matrixL() * z;
                    u *= s2;
                }
                else
                    u = s3 * z;
            } else {
                u = s3 * z;
            }
        }
        y = x + u;
        double lpy = log_post({y.data(), dim});
        if (std::isnan(lpy) || lpy == std::numeric_limits<double>::infinity()) {
            ++chain.nonfinite_proposals;
            lpy = -std::numeric_limits<double>::infinity();
        }
        const double diff = lpy - lp;
        const double r = unif(rng);
        if (lpy > -std::numeric_limits<double>::infinity() && (diff >= 0 || r < std::exp(diff))) {
            x = y;
            lp = lpy;
            chain.accepted[j] = 1;
        }
        chain.states.row(Eigen::Index(j)) = x.transpose();
        chain.log_post[j] = lp;

        ++count;
        const Eigen::VectorXd delta = x - mean;
        mean += delta / double(count);
        m2.noalias() += delta * (x - mean).transpose();
    }
    chain.final_covariance = count > 1 ? Eigen::MatrixXd(m2 / double(count - 1)) : Eigen::MatrixXd::Zero(D, D);
    return chain;
}

ThinnedSamples postprocess_chain(const PosteriorChain& chain, double burn_in_fraction, std::size_t thinning)
{
    PLUMECAL_REQUIRE(chain.size() > 0, "postprocess_chain: empty chain");
    PLUMECAL_REQUIRE(burn_in_fraction >= 0 && burn_in_fraction < 1, "postprocess_chain: burn-in fraction must be in [0, 1)");
    PLUMECAL_REQUIRE(thinning >= 1, "postprocess_chain: thinning must be >= 1");
    const std::size_t N = chain.size();
    const std::size_t burn = std::size_t(std::floor(burn_in_fraction * double(N)));
    ThinnedSamples out;
    for (std::size_t k = burn; k < N; k += thinning) out.indices.push_back(k);
    if (out.indices.empty()) throw ContractViolation("postprocess_chain: no samples retained");
    out.samples.resize(Eigen::Index(out.indices.size()), chain.states.cols());
    for (std::size_t r = 0; r < out.indices.size(); ++r) {
        out.samples.row(Eigen::Index(r)) = chain.states.row(Eigen::Index(out.indices[r]));
        out.log_post.push_back(chain.log_post[out.indices[r]]);
    }
    return out;
}

}  // namespace plumecal
