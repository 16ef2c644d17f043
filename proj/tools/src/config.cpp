#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "dampwave/error.hpp"

namespace dampwave::cli {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"domain", "interval", "interval | rectangle"},
      {"extent_x", "1", "domain length along x"},
      {"extent_y", "1", "domain length along y (rectangle only)"},
      {"nx", "127", "interior nodes along x"},
      {"ny", "127", "interior nodes along y (rectangle only)"},
      {"p", "4", "source exponent, p > 2"},
      {"omega", "0.1", "strong damping coefficient"},
      {"mu", "1", "frictional damping coefficient"},
      {"operator", "laplacian", "laplacian | mean_curvature"},
      {"diagnostic", "false", "allow omega = mu = 0 and negative dt"},
      {"source", "true", "include the source term (diagnostic mode only may disable it)"},
      {"initial", "stable", "stable | unstable | zero | file"},
      {"fraction", "0.5", "initial energy level J(u0) as a multiple of d"},
      {"shape", "ground_state", "ground_state | eigenmode"},
      {"initial_file", "", "displacement field file for initial = file"},
      {"velocity_file", "", "optional velocity field file for initial = file"},
      {"dt", "0.001", "time step"},
      {"picard_tol", "1e-10", "relative sup-norm tolerance of the Picard iteration"},
      {"picard_max", "50", "Picard iteration cap per step"},
      {"linear_tol", "1e-11", "relative residual of the 2D conjugate-gradient solve"},
      {"horizon", "20", "final time T"},
      {"sample_stride", "0", "record every k-th step; 0 picks 1 or 10 by grid size"},
      {"monitors", "auto", "auto | on | off; auto arms them for admissible stable data"},
      {"tol_cert_factor", "10", "certification tolerance as a multiple of dt^2"},
      {"seed", "12345", "seed of the random starts of the C* minimizer"},
      {"random_starts", "8", "random starts of the C* minimizer"},
      {"threads", "0", "threads for the C* minimizer; 0 uses all cores"},
      {"workers", "0", "concurrent sweep points; 0 uses all cores"},
      {"plot", "false", "also write a gnuplot script next to the CSV"},
      {"output_dir", "dampwave-out", "output directory; default taken from DAMPWAVE_OUTPUT_DIR"},
  };
  return keys;
}

ConfigMap default_config() {
  ConfigMap map;
  for (const ConfigKey& k : config_keys()) map[k.name] = k.default_value;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0')
    map["output_dir"] = env;
  return map;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void set_key(ConfigMap& config, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_keys()) {
    if (key == k.name) {
      config[key] = value;
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

double get_double(const ConfigMap& m, const std::string& key) {
  const std::string& text = m.at(key);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
  return value;
}

long long get_integer(const ConfigMap& m, const std::string& key) {
  const std::string& text = m.at(key);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("config key '" + key + "' expects an integer, got '" + text + "'");
  return value;
}

int get_int(const ConfigMap& m, const std::string& key) {
  const long long v = get_integer(m, key);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError("config key '" + key + "' is out of range");
  return static_cast<int>(v);
}

bool get_bool(const ConfigMap& m, const std::string& key) {
  const std::string& text = m.at(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + text + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  ConfigMap map = default_config();
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    set_key(map, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
  return map;
}

void apply_override(ConfigMap& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::stable: return "stable";
    case InitialKind::unstable: return "unstable";
    case InitialKind::zero: return "zero";
    case InitialKind::file: return "file";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map) {
  ConfigMap m = default_config();
  for (const auto& [k, v] : map) set_key(m, k, v);

  ExperimentConfig c;
  const std::string& kind = m.at("domain");
  if (kind == "interval")
    c.domain = Domain::interval(get_double(m, "extent_x"), get_int(m, "nx"));
  else if (kind == "rectangle")
    c.domain = Domain::rectangle(get_double(m, "extent_x"), get_double(m, "extent_y"),
                                 get_int(m, "nx"), get_int(m, "ny"));
  else
    throw ConfigError("config key 'domain' must be interval or rectangle");

  c.model.p = get_double(m, "p");
  c.model.omega = get_double(m, "omega");
  c.model.mu = get_double(m, "mu");
  c.model.op = spatial_operator_from_string(m.at("operator"));
  c.model.diagnostic = get_bool(m, "diagnostic");
  c.model.source = get_bool(m, "source");
  c.model.validate();
  require(c.model.source || c.model.diagnostic, "source = false requires diagnostic = true");
  const ExponentCheck ex = validate_exponent(c.model.p, c.domain.dim(), c.model.omega);
  require(ex.ok, "p = " + m.at("p") + " is outside the admissible range (2, " +
                     std::to_string(ex.p_bar) + "]");

  const std::string& initial = m.at("initial");
  if (initial == "stable") c.initial = InitialKind::stable;
  else if (initial == "unstable") c.initial = InitialKind::unstable;
  else if (initial == "zero") c.initial = InitialKind::zero;
  else if (initial == "file") c.initial = InitialKind::file;
  else throw ConfigError("config key 'initial' must be stable, unstable, zero or file");
  c.fraction = get_double(m, "fraction");
  require(c.fraction > 0.0 && std::isfinite(c.fraction), "fraction must be positive");
  if (c.initial == InitialKind::stable) require(c.fraction < 1.0, "stable data needs fraction < 1");
  const std::string& shape = m.at("shape");
  if (shape == "ground_state") c.shape = InitialShape::ground_state;
  else if (shape == "eigenmode") c.shape = InitialShape::eigenmode;
  else throw ConfigError("config key 'shape' must be ground_state or eigenmode");
  c.initial_file = m.at("initial_file");
  c.velocity_file = m.at("velocity_file");
  require(c.initial != InitialKind::file || !c.initial_file.empty(),
          "initial = file requires initial_file");

  c.step.dt = get_double(m, "dt");
  c.step.picard_tol = get_double(m, "picard_tol");
  c.step.picard_max = get_int(m, "picard_max");
  c.step.linear_solver_tol = get_double(m, "linear_tol");
  c.step.validate(c.model);
  c.horizon = get_double(m, "horizon");
  require(c.horizon > 0.0 && std::isfinite(c.horizon), "horizon must be positive");
  c.sample_stride = get_int(m, "sample_stride");
  require(c.sample_stride >= 0, "sample_stride must be non-negative");
  c.monitors = m.at("monitors");
  require(c.monitors == "auto" || c.monitors == "on" || c.monitors == "off",
          "config key 'monitors' must be auto, on or off");
  c.tol_cert_factor = get_double(m, "tol_cert_factor");
  require(c.tol_cert_factor >= 0.0, "tol_cert_factor must be non-negative");

  const long long seed = get_integer(m, "seed");
  require(seed >= 0, "seed must be non-negative");
  c.minimize.seed = static_cast<std::uint64_t>(seed);
  c.minimize.random_starts = get_int(m, "random_starts");
  require(c.minimize.random_starts >= 0, "random_starts must be non-negative");
  c.minimize.threads = get_int(m, "threads");
  c.workers = get_int(m, "workers");
  require(c.minimize.threads >= 0 && c.workers >= 0, "thread counts must be non-negative");
  c.plot = get_bool(m, "plot");
  c.output_dir = m.at("output_dir");
  require(!c.output_dir.empty(), "output_dir must not be empty");
  return c;
}

}  // namespace dampwave::cli
