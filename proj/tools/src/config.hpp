#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dampwave/lyapunov.hpp"
#include "dampwave/solver.hpp"
#include "dampwave/well.hpp"

namespace dampwave::cli {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "DAMPWAVE_OUTPUT_DIR";

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

/// Every recognised key, in the order used for --help and report echoes.
const std::vector<ConfigKey>& config_keys();

using ConfigMap = std::map<std::string, std::string>;

/// Defaults for every key; output_dir honours the environment variable.
ConfigMap default_config();

/// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
ConfigMap read_config_file(const std::filesystem::path& path);

/// Applies one `key=value` override; unknown keys are rejected.
void apply_override(ConfigMap& config, const std::string& assignment);

enum class InitialKind { stable, unstable, zero, file };

struct ExperimentConfig {
  Domain domain = Domain::interval(1.0, 127);
  ModelParams model;
  InitialKind initial = InitialKind::stable;
  double fraction = 0.5;
  InitialShape shape = InitialShape::ground_state;
  std::string initial_file;
  std::string velocity_file;
  StepConfig step;
  double horizon = 20.0;
  int sample_stride = 0;
  std::string monitors = "auto";  // auto | on | off
  double tol_cert_factor = 10.0;  // tol_cert = factor·dt²
  MinimizeOpts minimize;
  int workers = 0;
  bool plot = false;
  std::filesystem::path output_dir;

  /// Parses and validates; throws ConfigError naming the offending key.
  static ExperimentConfig from_map(const ConfigMap& map);
};

std::string to_string(InitialKind kind);

}  // namespace dampwave::cli
