#include <algorithm>
#include <cmath>
#include <numbers>

#include "plumecal/errors.hpp"
#include "plumecal/forward_model.hpp"
#include "plumecal/io.hpp"

namespace plumecal {

WindRecord::WindRecord(std::vector<WindSample> samples) : samples_(std::move(samples)) {}

void WindRecord::validate(double window) const
{
    if (samples_.empty()) throw ConfigError("wind record is empty");
    if (samples_.front().t > 0) throw ConfigError("wind record must start at or before t = 0");
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const auto& s = samples_[k];
        if (!std::isfinite(s.t) || !std::isfinite(s.speed) || !std::isfinite(s.direction))
            throw ConfigError("wind record: non-finite sample at row " + std::to_string(k));
        if (s.speed < 0) throw ConfigError("wind record: negative speed at row " + std::to_string(k));
        if (k > 0 && !(s.t > samples_[k - 1].t))
            throw ConfigError("wind record: times must increase strictly (row " + std::to_string(k) + ")");
    }
    if (!(window > 0)) throw ConfigError("wind record: window must be > 0");
}

WindRecord WindRecord::steady(double speed, double direction)
{
    return WindRecord({WindSample{0.0, speed, direction}});
}

WindRecord load_wind_csv(const std::filesystem::path& path)
{
    const auto table = io::read_csv(path);
    const auto ct = table.column("t_s");
    const auto cs = table.column("speed_mps");
    const auto cd = table.column("dir_rad");
    std::vector<WindSample> samples;
    samples.reserve(table.rows.size());
    for (const auto& row : table.rows)
        samples.push_back({io::parse_double(row[ct], "t_s"), io::parse_double(row[cs], "speed_mps"),
                           io::parse_double(row[cd], "dir_rad")});
    return WindRecord(std::move(samples));
}

void save_wind_csv(const std::filesystem::path& path, const WindRecord& wind)
{
    io::CsvTable t{{"t_s", "speed_mps", "dir_rad"}, {}};
    for (const auto& s : wind.samples())
        t.rows.push_back({io::to_decimal(s.t), io::to_decimal(s.speed), io::to_decimal(s.direction)});
    io::write_csv(path, t);
}

std::vector<WindBin> bin_wind(const WindRecord& wind, double window, int sectors)
{
    wind.validate(window);
    PLUMECAL_REQUIRE(sectors >= 1, "bin_wind: need at least one sector");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double width = two_pi / sectors;

    struct Acc {
        double duration = 0, speed_time = 0, sx = 0, cy = 0;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(sectors));
    const auto& s = wind.samples();
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double t0 = std::max(s[k].t, 0.0);
        const double t1 = std::min(k + 1 < s.size() ? s[k + 1].t : window, window);
        if (t1 <= t0) continue;
        const double dur = t1 - t0;
        double dir = std::fmod(s[k].direction, two_pi);
        if (dir < 0) dir += two_pi;
        const int sector = static_cast<int>(std::floor(dir / width + 0.5)) % sectors;
        auto& a = acc[std::size_t(sector)];
        a.duration += dur;
        a.speed_time += s[k].speed * dur;
        a.sx += std::sin(dir) * dur;
        a.cy += std::cos(dir) * dur;
    }
    std::vector<WindBin> bins;
    for (int b = 0; b < sectors; ++b) {
        const auto& a = acc[std::size_t(b)];
        if (a.duration <= 0) continue;
        double dir = std::atan2(a.sx, a.cy);
        if (dir < 0) dir += two_pi;
        bins.push_back({a.speed_time / a.duration, dir, a.duration});
    }
    return bins;
}

}  // namespace plumecal
