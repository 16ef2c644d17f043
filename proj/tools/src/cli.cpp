#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "dampwave/error.hpp"

namespace dampwave::cli {

namespace {

std::string keys_footer() {
  std::ostringstream out;
  out << "Config keys (file lines `key = value`, or --set key=value; later overrides win):\n";
  for (const ConfigKey& k : config_keys()) {
    std::string def = k.default_value;
    if (def.empty()) def = "\"\"";
    out << "  " << k.name << " = " << def << "\n      " << k.help << '\n';
  }
  out << "Exit codes: 0 success, 1 config or validation error, 2 numerical failure.\n"
      << "Environment: " << kOutputDirEnv << " sets the default output_dir.\n";
  return out.str();
}

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::string output_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "flat key = value config file");
  cmd->add_option("--set", args.sets, "override one config key (key=value), repeatable");
  cmd->add_option("-o,--output-dir", args.output_dir, "output directory (overrides output_dir)");
}

ConfigMap resolve(const CommonArgs& args) {
  ConfigMap map = args.config_file.empty() ? default_config() : read_config_file(args.config_file);
  for (const std::string& s : args.sets) apply_override(map, s);
  if (!args.output_dir.empty()) map["output_dir"] = args.output_dir;
  return map;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strongly damped semilinear wave equation: potential-well constants, "
               "simulations, decay certificates and parameter sweeps."};
  app.name("dampwave");
  app.footer(keys_footer());
  app.require_subcommand(1);

  CommonArgs well_args, run_args, sweep_args, classify_args;
  CLI::App* well = app.add_subcommand("well", "compute C*, d, beta and the Poincare constant");
  add_common(well, well_args);
  CLI::App* run = app.add_subcommand("run", "prepare data, integrate, certify decay");
  add_common(run, run_args);
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid and aggregate the results");
  add_common(sweep, sweep_args);
  std::vector<std::string> vary;
  sweep->add_option("--vary", vary, "grid axis key=v1,v2,... (repeatable; last axis varies fastest)")
      ->required();
  CLI::App* classify_cmd = app.add_subcommand("classify", "place a field file relative to the well");
  add_common(classify_cmd, classify_args);
  std::string field_file, velocity_file;
  classify_cmd->add_option("--field", field_file, "displacement field file")->required();
  classify_cmd->add_option("--velocity", velocity_file, "velocity field file (default zero)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (well->parsed()) {
      const ConfigMap map = resolve(well_args);
      const ExperimentConfig c = ExperimentConfig::from_map(map);
      const Json j = cmd_well(c, map);
      out << "C* = " << fmt(j["well"]["c_star"].get<double>()) << "  d = "
          << fmt(j["well"]["d"].get<double>()) << "  beta = " << fmt(j["well"]["beta"].get<double>())
          << "  lambda1 = " << fmt(j["well"]["lambda1"].get<double>()) << '\n'
          << "report: " << (c.output_dir / "well_report.json").string() << '\n';
    } else if (run->parsed()) {
      const ConfigMap map = resolve(run_args);
      const ExperimentConfig c = ExperimentConfig::from_map(map);
      const RunArtifacts art = cmd_run(c, map);
      const RunOutcome& o = art.result.outcome;
      out << "outcome: " << to_string(o.kind) << " at t = " << fmt(o.time);
      if (o.t_max_estimate) out << "  (T_max estimate " << fmt(*o.t_max_estimate) << ")";
      if (!o.details.empty()) out << "  [" << o.details << "]";
      out << '\n';
      if (art.certificate && std::isfinite(art.certificate->xi_fitted))
        out << "xi = " << fmt(art.certificate->xi) << "  xi_fitted = " << fmt(art.certificate->xi_fitted)
            << "  violations: " << (art.certificate->violated_at ? "yes" : "none") << '\n';
      out << "report: " << (c.output_dir / "run_report.json").string() << '\n';
    } else if (sweep->parsed()) {
      const ConfigMap map = resolve(sweep_args);
      std::vector<SweepAxis> axes;
      for (const std::string& v : vary) axes.push_back(parse_axis(v));
      const SweepSummary s = cmd_sweep(map, axes);
      out << s.rows << " points, " << s.failed << " failed\n"
          << "aggregate: " << s.aggregate.string() << '\n';
    } else if (classify_cmd->parsed()) {
      const ConfigMap map = resolve(classify_args);
      const ExperimentConfig c = ExperimentConfig::from_map(map);
      std::optional<std::filesystem::path> velocity;
      if (!velocity_file.empty()) velocity = velocity_file;
      const Json j = cmd_classify(c, map, field_file, velocity);
      const Json& k = j["classification"];
      out << std::boolalpha << "set: " << k["set"].get<std::string>() << "  in_W: " << k["in_W"].get<bool>()
          << "  in_U: " << k["in_U"].get<bool>() << "  E = " << fmt(k["E"].get<double>())
          << "  d = " << fmt(j["well"]["d"].get<double>()) << '\n'
          << "report: " << (c.output_dir / "classify_report.json").string() << '\n';
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace dampwave::cli
