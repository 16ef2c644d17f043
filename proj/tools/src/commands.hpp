#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace dampwave::cli {

using Json = nlohmann::ordered_json;

/// Computes C*, d, β and λ₁; writes well_report.json and ground_state.txt.
Json cmd_well(const ExperimentConfig& config, const ConfigMap& echo);

struct RunArtifacts {
  Json report;
  RunResult result;
  std::optional<DecayCertificate> certificate;
};

/// Prepares the initial data, integrates to the horizon and certifies decay
/// when the data lies in the stable set below the well depth. Writes
/// timeseries.csv, run_report.json, the initial fields and optionally plot.gp.
RunArtifacts cmd_run(const ExperimentConfig& config, const ConfigMap& echo);

/// Classifies a field file (and optional velocity file) against the well
/// constants of its own domain; writes classify_report.json.
Json cmd_classify(const ExperimentConfig& config, const ConfigMap& echo,
                  const std::filesystem::path& field,
                  const std::optional<std::filesystem::path>& velocity);

using SweepAxis = std::pair<std::string, std::vector<std::string>>;

/// Parses `key=v1,v2,...`.
SweepAxis parse_axis(const std::string& text);

struct SweepSummary {
  std::size_t rows = 0;
  std::size_t failed = 0;
  std::filesystem::path aggregate;
};

/// Runs every grid point (last axis fastest) into point_NNNN/ subdirectories
/// and writes sweep.csv in grid order. Points with ω = μ = 0 outside
/// diagnostic mode are skipped; per-point failures are recorded in the row.
SweepSummary cmd_sweep(const ConfigMap& base, const std::vector<SweepAxis>& axes);

/// Entry point shared by the executable and the tests; returns the exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dampwave::cli
