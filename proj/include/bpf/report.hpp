#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpf/bundle.hpp"

namespace bpf {

std::string version_string();

/// Everything needed to rerun an assessment.
struct RunManifest {
  std::string command;
  std::string network_path;
  std::optional<std::string> injection_path;
  std::optional<std::vector<double>> inline_u;
  std::optional<std::string> config_path;
  SolverConfig config;
  std::string version = version_string();
  int threads = 1;
  double wall_seconds = 0.0;
  std::size_t memory_estimate_bytes = 0;
  std::size_t peak_rss_bytes = 0;  // 0 when unavailable
};

/// Flat-key form of SolverConfig.
nlohmann::json config_to_json(const SolverConfig& c);
/// Applies the keys present in j on top of base. Unknown keys are rejected.
SolverConfig config_from_json(const nlohmann::json& j, SolverConfig base = {});
SolverConfig load_config(const std::string& path, SolverConfig base = {});

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// Rough working-set size of one solve.
std::size_t estimate_memory_bytes(const PenaltyObjective& problem, const SolverConfig& config);
/// VmHWM from /proc/self/status, 0 if unavailable.
std::size_t peak_rss_bytes();

/// Column names of the per-iteration table in the report.
const std::vector<std::string>& iteration_columns();

nlohmann::json report_to_json(const SolveReport& report, const RunManifest& manifest);
void write_report(const std::string& path, const nlohmann::json& report);
nlohmann::json read_report(const std::string& path);

}  // namespace bpf
