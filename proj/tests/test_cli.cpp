#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "dampwave/error.hpp"
#include "field_io.hpp"

using namespace dampwave;
using namespace dampwave::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dampwave_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int invoke(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "dampwave");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  ConfigMap m = default_config();
  EXPECT_EQ(m.size(), config_keys().size());
  apply_override(m, "omega = 0.25");
  EXPECT_EQ(m["omega"], "0.25");
  EXPECT_THROW(apply_override(m, "nonsense=1"), ConfigError);
  EXPECT_THROW(apply_override(m, "omega"), ConfigError);
  const ExperimentConfig c = ExperimentConfig::from_map(m);
  EXPECT_EQ(c.model.omega, 0.25);
  EXPECT_EQ(c.domain.fingerprint(), "interval:1:127");
  EXPECT_EQ(c.initial, InitialKind::stable);
}

TEST(Config, FileParsing) {
  const fs::path dir = scratch("config");
  {
    std::ofstream f(dir / "a.cfg");
    f << "# comment\n\ndomain = rectangle\nnx = 15\n  ny=31  \nextent_y = 2\n";
  }
  const ConfigMap m = read_config_file(dir / "a.cfg");
  const ExperimentConfig c = ExperimentConfig::from_map(m);
  EXPECT_EQ(c.domain.fingerprint(), "rectangle:1x2:15x31");
  {
    std::ofstream f(dir / "b.cfg");
    f << "domain interval\n";
  }
  EXPECT_THROW(read_config_file(dir / "b.cfg"), ConfigError);
  EXPECT_THROW(read_config_file(dir / "missing.cfg"), ConfigError);
}

TEST(Config, ValidationErrors) {
  const auto with = [](const std::string& kv) {
    ConfigMap m = default_config();
    apply_override(m, kv);
    return m;
  };
  EXPECT_THROW(ExperimentConfig::from_map(with("p=2")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("p=abc")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("horizon=0")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("dt=-0.1")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("fraction=1.2")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("nx=1")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("initial=file")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("source=false")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_map(with("monitors=maybe")), ConfigError);
  ConfigMap undamped = with("omega=0");
  apply_override(undamped, "mu=0");
  EXPECT_THROW(ExperimentConfig::from_map(undamped), ConfigError);
}

TEST(Config, OutputDirFromEnvironment) {
  ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
  EXPECT_EQ(default_config()["output_dir"], "/tmp/from-env");
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(default_config()["output_dir"], "dampwave-out");
}

TEST(FieldIo, RoundTripIsExact) {
  const Domain d = Domain::rectangle(1.0, 0.7, 9, 5);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist;
  GridField f(d);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = dist(rng) * 1e-3;
  std::stringstream s;
  write_field(s, f);
  const GridField back = read_field(s);
  EXPECT_TRUE(back.domain() == d);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(back[i], f[i]);
}

TEST(FieldIo, MalformedFiles) {
  std::stringstream bad_header("square:1:3\n1\n2\n3\n");
  EXPECT_THROW(read_field(bad_header), ConfigError);
  std::stringstream short_file("interval:1:3\n1\n2\n");
  EXPECT_THROW(read_field(short_file), ConfigError);
  std::stringstream long_file("interval:1:3\n1\n2\n3\n4\n");
  EXPECT_THROW(read_field(long_file), ConfigError);
  std::stringstream nan_file("interval:1:3\n1\nnan\n3\n");
  EXPECT_THROW(read_field(nan_file), ConfigError);
  std::stringstream empty;
  EXPECT_THROW(read_field(empty), ConfigError);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  std::string text;
  EXPECT_EQ(invoke({"--help"}, &text), 0);
  EXPECT_NE(text.find("tol_cert_factor = 10"), std::string::npos);
  EXPECT_EQ(invoke({}), 1);
  EXPECT_EQ(invoke({"bogus"}), 1);
  EXPECT_EQ(invoke({"well", "--set", "p=2", "-o", dir.string()}, &text), 1);
  EXPECT_NE(text.find("p must exceed 2"), std::string::npos);
  EXPECT_EQ(invoke({"classify", "--field", (dir / "missing.txt").string(), "-o", dir.string()}), 1);
  // One Picard sweep per step cannot converge, and nothing is growing yet.
  EXPECT_EQ(invoke({"run", "--set", "picard_max=1", "--set", "nx=31", "-o", dir.string()}, &text), 2);
}

TEST(Cli, WellReportIsDeterministic) {
  const fs::path dir = scratch("well");
  ASSERT_EQ(invoke({"well", "--set", "nx=255", "-o", dir.string()}), 0);
  const std::string a = slurp(dir / "well_report.json");
  const std::string ga = slurp(dir / "ground_state.txt");
  ASSERT_EQ(invoke({"well", "--set", "nx=255", "--set", "threads=1", "-o", dir.string()}), 0);
  std::string b = slurp(dir / "well_report.json");
  // The echoed thread count is the only permitted difference.
  const auto pos = b.find("\"threads\": \"1\"");
  ASSERT_NE(pos, std::string::npos);
  b.replace(pos, 14, "\"threads\": \"0\"");
  EXPECT_EQ(a, b);
  EXPECT_EQ(ga, slurp(dir / "ground_state.txt"));
  const Json j = Json::parse(a);
  for (const char* key : {"c_star", "d", "beta", "lambda1"}) EXPECT_TRUE(j["well"][key].is_number());
  EXPECT_EQ(j["resolution"]["n"][0].get<int>(), 255);
}

TEST(Cli, StableRunCertifies) {
  const fs::path dir = scratch("stable");
  ConfigMap m = default_config();
  apply_override(m, "omega=1");
  apply_override(m, "nx=63");
  m["output_dir"] = dir.string();
  const RunArtifacts art = cmd_run(ExperimentConfig::from_map(m), m);
  EXPECT_EQ(art.result.outcome.kind, RunOutcome::Kind::completed);
  ASSERT_TRUE(art.certificate.has_value());
  EXPECT_FALSE(art.certificate->violated_at.has_value());
  EXPECT_GE(art.certificate->xi_fitted, art.certificate->xi);
  const Json j = Json::parse(slurp(dir / "run_report.json"));
  EXPECT_EQ(j["outcome"]["kind"], "completed");
  EXPECT_TRUE(j["certificate"]["violated_at"].is_null());
  EXPECT_EQ(j["summary"]["certificate_status"], "certified");
  EXPECT_EQ(j["monitors"]["armed"], true);
  const std::string csv = slurp(dir / "timeseries.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,E,I,J,L,kinetic,grad_sq,lp_p,l2_v,grad_v_sq");
}

TEST(Cli, UnstableRunReportsBlowup) {
  const fs::path dir = scratch("unstable");
  std::string text;
  ASSERT_EQ(invoke({"run", "--set", "initial=unstable", "--set", "fraction=0.9", "--set", "omega=0",
                    "--set", "nx=63", "--set", "plot=true", "-o", dir.string()},
                   &text),
            0);
  const Json j = Json::parse(slurp(dir / "run_report.json"));
  EXPECT_EQ(j["outcome"]["kind"], "blew_up");
  EXPECT_TRUE(j["outcome"]["t_max_estimate"].is_number());
  EXPECT_TRUE(j["certificate"].is_null());
  EXPECT_TRUE(fs::exists(dir / "plot.gp"));
}

TEST(Cli, ZeroDataGivesZeroRows) {
  const fs::path dir = scratch("zero");
  ASSERT_EQ(invoke({"run", "--set", "initial=zero", "--set", "horizon=0.5", "--set", "nx=31", "-o",
                    dir.string()}),
            0);
  const auto rows = read_rows(dir / "timeseries.csv");
  ASSERT_EQ(rows.size(), 502u);
  for (std::size_t r = 1; r < rows.size(); ++r)
    for (std::size_t c = 1; c < rows[r].size(); ++c) EXPECT_EQ(rows[r][c], "0");
  const Json j = Json::parse(slurp(dir / "run_report.json"));
  EXPECT_EQ(j["outcome"]["kind"], "completed");
}

TEST(Cli, RunIsByteIdentical) {
  const fs::path dir = scratch("determinism");
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(invoke({"run", "--set", "horizon=2", "--set", "nx=63", "-o", (dir / sub).string()}), 0);
  EXPECT_EQ(slurp(dir / "a" / "timeseries.csv"), slurp(dir / "b" / "timeseries.csv"));
  std::string ra = slurp(dir / "a" / "run_report.json");
  std::string rb = slurp(dir / "b" / "run_report.json");
  // Reports echo their own output directory; strip it before comparing.
  const auto strip = [&](std::string s, const fs::path& p) {
    for (auto pos = s.find(p.string()); pos != std::string::npos; pos = s.find(p.string()))
      s.erase(pos, p.string().size());
    return s;
  };
  EXPECT_EQ(strip(ra, dir / "a"), strip(rb, dir / "b"));
}

TEST(Cli, SweepOverDampingGrid) {
  const fs::path dir = scratch("sweep");
  std::string text;
  const std::vector<std::string> args{"sweep", "--set", "horizon=3", "--set", "nx=63", "--vary",
                                      "omega=0,0.1,1", "--vary", "mu=0,1"};
  auto a = args;
  a.insert(a.end(), {"-o", (dir / "a").string()});
  ASSERT_EQ(invoke(a, &text), 0) << text;
  auto b = args;
  b.insert(b.end(), {"-o", (dir / "b").string(), "--set", "workers=3"});
  ASSERT_EQ(invoke(b), 0);
  const auto rows = read_rows(dir / "a" / "sweep.csv");
  ASSERT_EQ(rows.size(), 6u);
  const std::vector<std::pair<std::string, std::string>> expected{
      {"0", "1"}, {"0.1", "0"}, {"0.1", "1"}, {"1", "0"}, {"1", "1"}};
  for (std::size_t r = 1; r < rows.size(); ++r) {
    EXPECT_EQ(rows[r][1], expected[r - 1].first);
    EXPECT_EQ(rows[r][2], expected[r - 1].second);
    EXPECT_EQ(rows[r][8], "completed");
  }
  EXPECT_EQ(slurp(dir / "a" / "sweep.csv"), slurp(dir / "b" / "sweep.csv"));
}

TEST(Cli, SweepRateFallsWithEnergy) {
  const fs::path dir = scratch("sweep_fraction");
  ConfigMap base = default_config();
  base["horizon"] = "1";
  base["nx"] = "63";
  base["output_dir"] = dir.string();
  const SweepSummary s = cmd_sweep(base, {parse_axis("fraction=0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")});
  EXPECT_EQ(s.rows, 9u);
  EXPECT_EQ(s.failed, 0u);
  const auto rows = read_rows(s.aggregate);
  double prev = INFINITY;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double xi = std::stod(rows[r][4]);
    EXPECT_LE(xi, prev);
    prev = xi;
  }
}

TEST(Cli, SweepRecordsFailuresPerRow) {
  const fs::path dir = scratch("sweep_fail");
  ConfigMap base = default_config();
  base["horizon"] = "0.5";
  base["nx"] = "31";
  base["output_dir"] = dir.string();
  const SweepSummary s = cmd_sweep(base, {parse_axis("fraction=0.5,1.5")});
  EXPECT_EQ(s.rows, 2u);
  EXPECT_EQ(s.failed, 1u);
  const auto rows = read_rows(s.aggregate);
  EXPECT_EQ(rows[1][7], "completed");
  EXPECT_EQ(rows[2][7], "config_error");
  EXPECT_NE(rows[2][10].find("fraction"), std::string::npos);
  EXPECT_THROW(parse_axis("fraction"), ConfigError);
  EXPECT_THROW(parse_axis("bogus=1"), ConfigError);
  EXPECT_THROW(parse_axis("mu=1,,2"), ConfigError);
}

TEST(Cli, ClassifyRoundTripMatchesInMemory) {
  const fs::path dir = scratch("classify");
  ConfigMap m = default_config();
  m["nx"] = "63";
  m["output_dir"] = dir.string();
  const ExperimentConfig c = ExperimentConfig::from_map(m);
  const WellConstants wc = well_constants(c.domain, c.model.p, c.minimize);
  for (const auto& [target, name] : {std::pair{InitialTarget::stable(0.4), "s"},
                                     std::pair{InitialTarget::unstable(0.8), "u"}}) {
    const InitialData data = prepare_initial_data(c.domain, c.model, wc, target);
    GridField v = 0.1 * data.u0;
    const fs::path uf = dir / (std::string(name) + "_u.txt");
    const fs::path vf = dir / (std::string(name) + "_v.txt");
    write_field(uf, data.u0);
    write_field(vf, v);
    const Classification direct = classify(SimState(0.0, data.u0, v), c.model, wc);
    const Json j = cmd_classify(c, m, uf, vf);
    const Json& k = j["classification"];
    EXPECT_EQ(k["set"], to_string(direct.set));
    EXPECT_EQ(k["in_W"], direct.in_W);
    EXPECT_EQ(k["in_U"], direct.in_U);
    EXPECT_EQ(k["E"].get<double>(), direct.E);
    EXPECT_EQ(k["I"].get<double>(), direct.I);
    EXPECT_EQ(k["J"].get<double>(), direct.J);
  }
}
