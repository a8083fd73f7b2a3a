#pragma once

#include <filesystem>
#include <functional>

#include <nlohmann/json.hpp>

#include "plumecal/pipeline.hpp"

namespace plumecal::pipeline::detail {

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

void save_design(const std::filesystem::path& csv, const std::filesystem::path& json, const DesignSet& d);
DesignSet load_design(const std::filesystem::path& json);

std::vector<Eigen::MatrixXd> load_snapshots(const std::filesystem::path& dir, std::size_t count);
void save_snapshots(const std::filesystem::path& dir, const std::vector<Eigen::MatrixXd>& snaps, const SiteConfig& site);

/// Observed data: the configured file, else the synthetic one.
Measurements observed(const PipelineConfig& cfg);
/// Noise variance for inversions: fixed value, calibration or synthetic truth.
double resolve_lambda(const PipelineConfig& cfg);
/// Clean synthetic deposition, from the file when present, else the full solver.
SyntheticData synthetic_truth(const PipelineConfig& cfg);

void write_chain_csv(const std::filesystem::path& path, const InversionResult& r, bool full);

DesignSet make_design(const PipelineConfig& cfg, const ParameterBox& box, std::size_t K, std::uint64_t seed);

}  // namespace plumecal::pipeline::detail
