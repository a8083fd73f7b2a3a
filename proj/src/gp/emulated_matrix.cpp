#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "plumecal/errors.hpp"
#include "plumecal/gp.hpp"
#include "plumecal/io.hpp"

namespace plumecal {

namespace {

std::vector<double> distances_to_design(const Eigen::MatrixXd& design, const std::vector<double>& u)
{
    const Eigen::Map<const Eigen::RowVectorXd> q(u.data(), Eigen::Index(u.size()));
    std::vector<double> d(std::size_t(design.rows()));
    for (Eigen::Index k = 0; k < design.rows(); ++k) d[std::size_t(k)] = (design.row(k) - q).norm();
    return d;
}

std::size_t nearest(const std::vector<double>& d)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < d.size(); ++k)
        if (d[k] < d[best]) best = k;
    return best;
}

}  // namespace

EmulatedMatrix EmulatedMatrix::build(const DesignSet& design, const std::vector<Eigen::MatrixXd>& snapshots,
                                     KernelFamily family, const FitOptions& options)
{
    PLUMECAL_REQUIRE(design.size() >= 2, "emulate_matrix: need at least two design points");
    PLUMECAL_REQUIRE(snapshots.size() == design.size(), "emulate_matrix: one snapshot per design point required");
    EmulatedMatrix em;
    em.box_ = design.box;
    em.design_ = design.points;
    em.family_ = family;
    em.rows_ = std::size_t(snapshots.front().rows());
    em.cols_ = std::size_t(snapshots.front().cols());
    for (const auto& s : snapshots)
        PLUMECAL_REQUIRE(std::size_t(s.rows()) == em.rows_ && std::size_t(s.cols()) == em.cols_,
                         "emulate_matrix: snapshot shapes differ");

    const Eigen::Index K = Eigen::Index(design.size());
    em.entries_.resize(em.rows_ * em.cols_);
    for (std::size_t i = 0; i < em.rows_; ++i)
        for (std::size_t j = 0; j < em.cols_; ++j) {
            Entry& e = em.entries_[i * em.cols_ + j];
            e.values.resize(K);
            for (Eigen::Index k = 0; k < K; ++k) e.values(k) = snapshots[std::size_t(k)](Eigen::Index(i), Eigen::Index(j));
            try {
                e.gp = GaussianProcessEmulator::fit(em.design_, e.values, family, options);
            } catch (const NumericalError& ex) {
                e.fallback = true;
                em.warnings_.push_back("entry (" + std::to_string(i) + "," + std::to_string(j) +
                                       ") uses nearest-neighbour fallback: " + ex.what());
            }
        }
    return em;
}

Eigen::MatrixXd EmulatedMatrix::mean(std::span<const double> theta) const
{
    double clamped = 0;
    return mean(theta, clamped);
}

Eigen::MatrixXd EmulatedMatrix::mean(std::span<const double> theta, double& clamped) const
{
    const std::vector<double> d = distances_to_design(design_, box_.to_unit(theta));
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    clamped = 0;
    std::size_t nn = d.size();
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
            const Entry& e = entries_[i * cols_ + j];
            double v;
            if (e.fallback) {
                if (nn == d.size()) nn = nearest(d);
                v = e.values(Eigen::Index(nn));
            } else {
                v = e.gp.mean_from_distances(d);
            }
            if (v < 0) {
                clamped += -v;
                v = 0;
            }
            a(Eigen::Index(i), Eigen::Index(j)) = v;
        }
    return a;
}

Eigen::MatrixXd EmulatedMatrix::variance(std::span<const double> theta) const
{
    const std::vector<double> u = box_.to_unit(theta);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(Eigen::Index(rows_), Eigen::Index(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
            const Entry& e = entries_[i * cols_ + j];
            if (!e.fallback) v(Eigen::Index(i), Eigen::Index(j)) = e.gp.predict(u).variance;
        }
    return v;
}

void EmulatedMatrix::save_json(const std::filesystem::path& path) const
{
    using nlohmann::json;
    json j;
    j["format"] = "plumecal-emulated-matrix";
    j["version"] = 1;
    j["family"] = to_string(family_);
    j["rows"] = rows_;
    j["cols"] = cols_;
    json box = json::array();
    for (const auto& r : box_.ranges())
        box.push_back({{"name", r.name}, {"lower", io::to_hex(r.lower)}, {"upper", io::to_hex(r.upper)}});
    j["box"] = box;
    json pts = json::array();
    for (Eigen::Index k = 0; k < design_.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index c = 0; c < design_.cols(); ++c) row.push_back(io::to_hex(design_(k, c)));
        pts.push_back(row);
    }
    j["design"] = pts;
    json entries = json::array();
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t c = 0; c < cols_; ++c) {
            const Entry& e = entries_[i * cols_ + c];
            json je;
            je["i"] = i;
            je["j"] = c;
            je["fallback"] = e.fallback;
            json vals = json::array();
            for (Eigen::Index k = 0; k < e.values.size(); ++k) vals.push_back(io::to_hex(e.values(k)));
            je["values"] = vals;
            if (!e.fallback) {
                je["r1"] = io::to_hex(e.gp.kernel().r1);
                je["r2"] = io::to_hex(e.gp.kernel().r2);
                je["jitter"] = io::to_hex(e.gp.jitter());
            }
            entries.push_back(je);
        }
    j["entries"] = entries;
    j["warnings"] = warnings_;
    io::write_text(path, j.dump(1) + "\n");
}

EmulatedMatrix EmulatedMatrix::load_json(const std::filesystem::path& path)
{
    using nlohmann::json;
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw ConfigError("emulator file " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "plumecal-emulated-matrix")
            throw ConfigError("emulator file " + path.string() + ": unexpected format tag");
        EmulatedMatrix em;
        em.family_ = kernel_family_from_string(j.at("family").get<std::string>());
        em.rows_ = j.at("rows").get<std::size_t>();
        em.cols_ = j.at("cols").get<std::size_t>();
        std::vector<ParameterRange> ranges;
        for (const auto& r : j.at("box"))
            ranges.push_back({r.at("name").get<std::string>(), io::from_hex(r.at("lower").get<std::string>()),
                              io::from_hex(r.at("upper").get<std::string>())});
        em.box_ = ParameterBox(std::move(ranges));
        const auto& pts = j.at("design");
        em.design_.resize(Eigen::Index(pts.size()), Eigen::Index(em.box_.dimension()));
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (pts[k].size() != em.box_.dimension()) throw ConfigError("emulator file: design row has wrong length");
            for (std::size_t c = 0; c < pts[k].size(); ++c)
                em.design_(Eigen::Index(k), Eigen::Index(c)) = io::from_hex(pts[k][c].get<std::string>());
        }
        const auto& entries = j.at("entries");
        if (entries.size() != em.rows_ * em.cols_) throw ConfigError("emulator file: entry count mismatch");
        em.entries_.resize(entries.size());
        for (const auto& je : entries) {
            const std::size_t i = je.at("i").get<std::size_t>(), c = je.at("j").get<std::size_t>();
            if (i >= em.rows_ || c >= em.cols_) throw ConfigError("emulator file: entry index out of range");
            Entry& e = em.entries_[i * em.cols_ + c];
            const auto& vals = je.at("values");
            if (vals.size() != std::size_t(em.design_.rows())) throw ConfigError("emulator file: value count mismatch");
            e.values.resize(Eigen::Index(vals.size()));
            for (std::size_t k = 0; k < vals.size(); ++k) e.values(Eigen::Index(k)) = io::from_hex(vals[k].get<std::string>());
            e.fallback = je.at("fallback").get<bool>();
            if (!e.fallback) {
                const Kernel kernel{em.family_, io::from_hex(je.at("r1").get<std::string>()),
                                    io::from_hex(je.at("r2").get<std::string>())};
                e.gp = GaussianProcessEmulator::condition(em.design_, e.values, kernel,
                                                          io::from_hex(je.at("jitter").get<std::string>()));
            }
        }
        for (const auto& w : j.value("warnings", json::array())) em.warnings_.push_back(w.get<std::string>());
        return em;
    } catch (const json::exception& e) {
        throw ConfigError("emulator file " + path.string() + ": " + e.what());
    }
}

}  // namespace plumecal
