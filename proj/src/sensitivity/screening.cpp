#include <algorithm>

#include "plumecal/errors.hpp"
#include "plumecal/seeds.hpp"
#include "plumecal/sensitivity.hpp"

namespace plumecal {

ScreeningResult screen_parameters(const DesignSet& design, const Eigen::MatrixXd& values,
                                  const ScreeningOptions& options, std::uint64_t seed)
{
    PLUMECAL_REQUIRE(std::size_t(values.rows()) == design.size(), "screen_parameters: one row of values per design point");
    PLUMECAL_REQUIRE(!options.families.empty(), "screen_parameters: no kernel families");
    const std::size_t d = std::size_t(values.cols());
    const std::size_t m = design.dimension();
    const ParameterBox unit = ParameterBox::unit(m);

    ScreeningResult out;
    out.stats.assign(d, std::vector<BoxplotStats>(m));
    std::vector<std::vector<double>> pooled(m);
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<std::vector<double>> per_param(m);
        for (KernelFamily fam : options.families) {
            GaussianProcessEmulator gp;
            try {
                gp = GaussianProcessEmulator::fit(design.points, values.col(Eigen::Index(i)), fam, options.fit);
            } catch (const NumericalError& e) {
                out.warnings.push_back("receptor " + std::to_string(i) + ", kernel " + to_string(fam) +
                                       " excluded: " + e.what());
                continue;
            }
            // surrogates live on the unit cube; the same samples serve every receptor and kernel
            const BatchFunction f = [&gp](const Eigen::MatrixXd& x) {
                Eigen::VectorXd y(x.rows());
                for (Eigen::Index r = 0; r < x.rows(); ++r) {
                    const Eigen::VectorXd row = x.row(r).transpose();
                    y(r) = gp.predict_mean({row.data(), std::size_t(row.size())});
                }
                return y;
            };
            const SobolResult s = sobol_total_indices(f, unit, options.base_samples, child_seed(seed, "sobol"));
            if (s.degenerate)
                out.warnings.push_back("receptor " + std::to_string(i) + ", kernel " + to_string(fam) +
                                       ": surrogate output is constant");
            for (std::size_t p = 0; p < m; ++p) {
                out.records.push_back({i, design.box[p].name, fam, s.total[p]});
                per_param[p].push_back(s.total[p]);
                pooled[p].push_back(s.total[p]);
            }
        }
        for (std::size_t p = 0; p < m; ++p)
            if (!per_param[p].empty()) out.stats[i][p] = boxplot_stats(per_param[p]);
    }

    for (std::size_t p = 0; p < m; ++p) {
        ParameterVerdict v;
        v.name = design.box[p].name;
        if (pooled[p].empty()) {
            out.warnings.push_back("parameter " + v.name + ": no surrogate succeeded, kept by default");
        } else {
            v.median_total = quantile_type7(pooled[p], 0.5);
            v.kept = !(v.median_total < options.threshold);
        }
        out.verdict.push_back(v);
    }
    if (options.keep_coupled) {
        auto find = [&](const std::string& n) {
            return std::find_if(out.verdict.begin(), out.verdict.end(), [&](const auto& v) { return v.name == n; });
        };
        auto lead = find(options.coupled.first), follow = find(options.coupled.second);
        if (lead != out.verdict.end() && follow != out.verdict.end() && lead->kept && !follow->kept) {
            follow->kept = true;
            follow->kept_by_coupling = true;
        }
    }
    return out;
}

}  // namespace plumecal
