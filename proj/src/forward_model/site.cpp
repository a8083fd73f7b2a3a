#include <cmath>
#include <string>

#include <toml.hpp>

#include "plumecal/errors.hpp"
#include "plumecal/forward_model.hpp"

namespace plumecal {

namespace {

bool strictly_inside(const DomainBounds& d, double x, double y)
{
    return x > d.x_min && x < d.x_max && y > d.y_min && y < d.y_max;
}

template <typename T>
T required(const toml::node_view<const toml::node>& node, const std::string& key)
{
    auto v = node.value<T>();
    if (!v) throw ConfigError("site config: missing or invalid '" + key + "'");
    return *v;
}

std::pair<double, double> interval(const toml::node_view<const toml::node>& node, const std::string& key)
{
    const auto* arr = node.as_array();
    if (!arr || arr->size() != 2) throw ConfigError("site config: '" + key + "' must be [lower, upper]");
    auto lo = (*arr)[0].value<double>();
    auto hi = (*arr)[1].value<double>();
    if (!lo || !hi) throw ConfigError("site config: '" + key + "' must hold numbers");
    return {*lo, *hi};
}

}  // namespace

void SiteConfig::validate() const
{
    if (sources.empty()) throw ConfigError("site: need at least one source");
    if (receptors.empty()) throw ConfigError("site: need at least one receptor");
    if (source_labels.size() != sources.size() || receptor_labels.size() != receptors.size())
        throw ConfigError("site: label count mismatch");
    if (!(jar_area > 0)) throw ConfigError("site: jar_area must be > 0");
    if (!(v_set >= 0)) throw ConfigError("site: v_set must be >= 0");
    if (!(v_dep >= 0)) throw ConfigError("site: v_dep must be >= 0");
    if (!(z_ref > 0)) throw ConfigError("site: z_ref must be > 0");
    if (!(window > 0)) throw ConfigError("site: accumulation window must be > 0");
    if (!(domain.x_max > domain.x_min && domain.y_max > domain.y_min && domain.z_max > 0))
        throw ConfigError("site: empty domain");
    if (grid.nx < 1 || grid.ny < 1 || grid.nz < 2)
        throw ConfigError("site: grid needs nx, ny >= 1 and nz >= 2");
    for (std::size_t j = 0; j < sources.size(); ++j) {
        const auto& s = sources[j];
        if (!(s.z >= 0)) throw ConfigError("site: source " + source_labels[j] + " below ground");
        if (!strictly_inside(domain, s.x, s.y) || !(s.z < domain.z_max))
            throw ConfigError("site: source " + source_labels[j] + " outside the domain");
    }
    for (std::size_t i = 0; i < receptors.size(); ++i)
        if (!strictly_inside(domain, receptors[i].x, receptors[i].y))
            throw ConfigError("site: receptor " + receptor_labels[i] + " outside the domain");
}

SiteConfig SiteConfig::with_grid(GridResolution g) const
{
    SiteConfig copy = *this;
    copy.grid = g;
    return copy;
}

SiteConfig load_site(const std::filesystem::path& toml_path)
{
    toml::table tbl;
    try {
        tbl = toml::parse_file(toml_path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError("site config " + toml_path.string() + ": " + std::string(e.description()));
    }
    const toml::node_view<const toml::node> root{tbl};
    SiteConfig site;
    site.name = root["name"].value_or(std::string("site"));
    site.jar_area = required<double>(root["jar_area"], "jar_area");
    site.v_set = required<double>(root["v_set"], "v_set");
    site.v_dep = required<double>(root["v_dep"], "v_dep");
    site.z_ref = required<double>(root["z_ref"], "z_ref");
    site.window = required<double>(root["window_s"], "window_s");

    auto [x0, x1] = interval(root["domain"]["x"], "domain.x");
    auto [y0, y1] = interval(root["domain"]["y"], "domain.y");
    site.domain = {x0, x1, y0, y1, required<double>(root["domain"]["z_max"], "domain.z_max")};
    site.grid = {static_cast<int>(required<std::int64_t>(root["grid"]["nx"], "grid.nx")),
                 static_cast<int>(required<std::int64_t>(root["grid"]["ny"], "grid.ny")),
                 static_cast<int>(required<std::int64_t>(root["grid"]["nz"], "grid.nz"))};

    const auto* srcs = tbl["sources"].as_array();
    if (!srcs) throw ConfigError("site config: missing [[sources]]");
    for (const auto& n : *srcs) {
        const auto* t = n.as_table();
        if (!t) throw ConfigError("site config: [[sources]] entries must be tables");
        const toml::node_view<const toml::node> s{*t};
        site.source_labels.push_back(s["label"].value_or("q" + std::to_string(site.sources.size() + 1)));
        site.sources.push_back({required<double>(s["x"], "sources.x"), required<double>(s["y"], "sources.y"),
                                required<double>(s["z"], "sources.z")});
    }
    const auto* recs = tbl["receptors"].as_array();
    if (!recs) throw ConfigError("site config: missing [[receptors]]");
    for (const auto& n : *recs) {
        const auto* t = n.as_table();
        if (!t) throw ConfigError("site config: [[receptors]] entries must be tables");
        const toml::node_view<const toml::node> r{*t};
        site.receptor_labels.push_back(r["label"].value_or("R" + std::to_string(site.receptors.size() + 1)));
        site.receptors.push_back({required<double>(r["x"], "receptors.x"), required<double>(r["y"], "receptors.y")});
    }
    site.validate();
    return site;
}

}  // namespace plumecal
