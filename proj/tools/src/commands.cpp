#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include "dampwave/error.hpp"
#include "field_io.hpp"

namespace dampwave::cli {

namespace fs = std::filesystem;

namespace {

using WellSource = std::function<WellConstants(const Domain&, double p)>;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json echo_json(const ConfigMap& echo) {
  Json j = Json::object();
  for (const ConfigKey& k : config_keys()) {
    const auto it = echo.find(k.name);
    j[k.name] = it != echo.end() ? it->second : std::string(k.default_value);
  }
  return j;
}

Json well_json(const WellConstants& wc) {
  return Json{{"c_star", wc.c_star}, {"d", wc.d},       {"beta", wc.beta},
              {"lambda1", wc.lambda1}, {"p", wc.p}, {"domain", wc.domain_fingerprint}};
}

Json classification_json(const Classification& c) {
  return Json{{"set", to_string(c.set)},
              {"in_W", c.in_W},
              {"in_U", c.in_U},
              {"high_energy", c.high_energy},
              {"admissible", c.admissible},
              {"admissibility", c.admissibility},
              {"I", c.I},
              {"J", c.J},
              {"E", c.E},
              {"tol_I", c.tol_I}};
}

Json certificate_json(const DecayCertificate& c, double tol_cert) {
  return Json{{"delta", c.delta},
              {"eta", c.eta},
              {"M", c.M},
              {"epsilon", c.epsilon},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"xi", c.xi},
              {"xi_fitted", c.xi_fitted},
              {"fit_r2", c.fit_r2},
              {"violated_at", optional_number(c.violated_at)},
              {"tol_cert", tol_cert},
              {"K", c.context.K},
              {"c0", c.context.c0}};
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

WellConstants compute_well(const Domain& domain, double p, const MinimizeOpts& opts) {
  return well_constants(domain, p, opts);
}

void write_plot_script(const fs::path& path, bool log_scale) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "set datafile separator ','\n"
      << "set xlabel 't'\n"
      << "set key outside\n";
  if (log_scale) out << "set logscale y\n";
  out << "plot 'timeseries.csv' using 1:2 with lines title 'E', \\\n"
      << "     '' using 1:5 with lines title 'L', \\\n"
      << "     '' using 1:7 with lines title '|grad u|^2'\n"
      << "pause mouse close\n";
}

RunArtifacts run_with(const ExperimentConfig& config, const ConfigMap& echo, const WellSource& well) {
  const ModelParams& model = config.model;
  std::optional<GridField> file_u, file_v;
  Domain domain = config.domain;
  if (config.initial == InitialKind::file) {
    file_u = read_field(fs::path(config.initial_file));
    domain = file_u->domain();
    if (!config.velocity_file.empty()) {
      file_v = read_field(fs::path(config.velocity_file));
      if (!(file_v->domain() == domain))
        throw ConfigError("velocity file lives on a different domain than the displacement file");
    }
  }
  if (!validate_exponent(model.p, domain.dim(), model.omega).ok)
    throw ConfigError("p is outside the admissible range for this domain");

  const WellConstants wc = well(domain, model.p);
  SimState initial = SimState::zero(domain);
  double scale = 0.0;
  switch (config.initial) {
    case InitialKind::stable:
    case InitialKind::unstable: {
      const InitialTarget target = config.initial == InitialKind::stable
                                       ? InitialTarget::stable(config.fraction)
                                       : InitialTarget::unstable(config.fraction);
      InitialData data = prepare_initial_data(domain, model, wc, target, config.shape);
      initial = SimState(0.0, std::move(data.u0), std::move(data.u1));
      scale = data.scale;
      break;
    }
    case InitialKind::file:
      initial = SimState(0.0, *file_u, file_v ? *file_v : GridField(domain));
      break;
    case InitialKind::zero:
      break;
  }

  const Classification cls = classify(initial, model, wc);
  // Decay theory covers data in the stable set strictly below the well depth.
  const bool stable_theory = cls.in_W && cls.admissible && model.op == SpatialOperator::laplacian &&
                             model.source_active();
  std::optional<DecayCertificate> cert;
  if (stable_theory) cert = select_constants(cls.E, model, wc);

  RunOptions opts;
  opts.horizon = config.horizon;
  opts.sample_stride = config.sample_stride;
  opts.lyapunov_epsilon = cert ? cert->epsilon : 0.0;
  const bool armed = config.monitors == "on" || (config.monitors == "auto" && stable_theory);
  if (armed) opts.monitors = MonitorSet::stable_run();

  RunArtifacts art{Json(), run(initial, model, config.step, opts), std::nullopt};
  const double tol_cert = config.tol_cert_factor * config.step.dt * config.step.dt;
  std::optional<EquivalenceReport> equivalence;
  if (cert && cls.E > 0.0 && art.result.outcome.kind == RunOutcome::Kind::completed) {
    *cert = certify_decay(art.result.series, *cert, tol_cert);
    equivalence = equivalence_check(art.result.series, *cert);
  }
  art.certificate = cert;

  const fs::path dir = prepare_dir(config.output_dir);
  art.result.series.write_csv((dir / "timeseries.csv").string());
  write_field(dir / "initial_u.txt", initial.u);
  write_field(dir / "initial_v.txt", initial.v);
  if (config.plot)
    write_plot_script(dir / "plot.gp", art.result.outcome.kind == RunOutcome::Kind::completed &&
                                           art.result.series.samples.back().E > 0.0);

  const RunOutcome& outcome = art.result.outcome;
  Json j;
  j["command"] = "run";
  j["config"] = echo_json(echo);
  j["domain"] = domain.fingerprint();
  j["well"] = well_json(wc);
  j["initial"] = Json{{"kind", to_string(config.initial)},
                      {"fraction", config.fraction},
                      {"scale", scale},
                      {"E0", cls.E},
                      {"classification", classification_json(cls)}};
  j["monitors"] = Json{{"armed", armed}, {"mode", config.monitors}};
  j["certificate"] = cert ? certificate_json(*cert, tol_cert) : Json(nullptr);
  j["equivalence"] = equivalence ? Json{{"checked", equivalence->checked},
                                        {"violations", equivalence->violations},
                                        {"first_violation", optional_number(equivalence->first_violation)},
                                        {"min_ratio", equivalence->min_ratio},
                                        {"max_ratio", equivalence->max_ratio}}
                                 : Json(nullptr);
  j["outcome"] = Json{{"kind", to_string(outcome.kind)},
                      {"time", outcome.time},
                      {"t_max_estimate", optional_number(outcome.t_max_estimate)},
                      {"details", outcome.details}};
  const Sample& last = art.result.series.samples.back();
  Json summary{{"steps", art.result.steps},
               {"samples", art.result.series.samples.size()},
               {"E_final", last.E},
               {"energy_drift", art.result.energy_drift},
               {"max_step_residual", art.result.max_step_residual},
               {"heuristic_energy_increases", art.result.heuristic_energy_increases}};
  if (cert && cert->violated_at.has_value()) summary["certificate_status"] = "violated";
  else if (cert && std::isfinite(cert->xi_fitted)) summary["certificate_status"] = "certified";
  else summary["certificate_status"] = "not_applicable";
  if (cert && std::isfinite(cert->xi_fitted)) summary["xi_fitted_ge_xi"] = cert->xi_fitted >= cert->xi;
  j["summary"] = summary;
  j["files"] = Json{{"timeseries", "timeseries.csv"},
                    {"initial_u", "initial_u.txt"},
                    {"initial_v", "initial_v.txt"},
                    {"plot", config.plot ? Json("plot.gp") : Json(nullptr)}};
  write_json(dir / "run_report.json", j);
  art.report = std::move(j);
  return art;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

// Shares well constants between sweep points on the same grid and exponent.
class WellCache {
 public:
  WellConstants get(const Domain& domain, double p, const MinimizeOpts& opts) {
    const std::string key = domain.fingerprint() + "|" + csv_number(p) + "|" +
                            std::to_string(opts.seed) + "|" + std::to_string(opts.random_starts);
    std::shared_future<WellConstants> future;
    std::promise<WellConstants> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(key);
      if (it == cache_.end()) {
        future = promise.get_future().share();
        cache_.emplace(key, future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(compute_well(domain, p, opts));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_future<WellConstants>> cache_;
};

struct SweepRow {
  std::vector<std::string> values;
  double E0 = NAN, d = NAN, xi = NAN, xi_fitted = NAN, fit_r2 = NAN;
  std::string outcome;
  std::optional<double> t_max, violated_at;
  std::string error;
};

}  // namespace

Json cmd_well(const ExperimentConfig& config, const ConfigMap& echo) {
  const Domain& domain = config.domain;
  const CStarResult cs = compute_c_star(domain, config.model.p, config.minimize);
  WellConstants wc = WellConstants::from_c_star(cs.c_star, config.model.p, poincare_constant(domain));
  wc.domain_fingerprint = domain.fingerprint();

  const fs::path dir = prepare_dir(config.output_dir);
  write_field(dir / "ground_state.txt", cs.minimizer);
  Json j;
  j["command"] = "well";
  j["config"] = echo_json(echo);
  j["well"] = well_json(wc);
  j["resolution"] = Json{{"dim", domain.dim()},
                         {"n", domain.dim() == 1 ? Json{domain.n(0)} : Json{domain.n(0), domain.n(1)}},
                         {"h", domain.dim() == 1 ? Json{domain.h(0)} : Json{domain.h(0), domain.h(1)}}};
  j["minimizer"] = Json{{"residual", cs.residual},
                        {"iterations", cs.iterations},
                        {"converged_starts", cs.converged_starts},
                        {"random_starts", config.minimize.random_starts},
                        {"seed", config.minimize.seed}};
  j["files"] = Json{{"ground_state", "ground_state.txt"}};
  write_json(dir / "well_report.json", j);
  return j;
}

RunArtifacts cmd_run(const ExperimentConfig& config, const ConfigMap& echo) {
  return run_with(config, echo, [&](const Domain& d, double p) {
    return compute_well(d, p, config.minimize);
  });
}

Json cmd_classify(const ExperimentConfig& config, const ConfigMap& echo, const fs::path& field,
                  const std::optional<fs::path>& velocity) {
  GridField u = read_field(field);
  GridField v(u.domain());
  if (velocity) {
    v = read_field(*velocity);
    if (!(v.domain() == u.domain()))
      throw ConfigError("velocity file lives on a different domain than the displacement file");
  }
  const Domain domain = u.domain();
  if (!validate_exponent(config.model.p, domain.dim(), config.model.omega).ok)
    throw ConfigError("p is outside the admissible range for this domain");
  const WellConstants wc = compute_well(domain, config.model.p, config.minimize);
  const SimState state(0.0, std::move(u), std::move(v));
  const Classification cls = classify(state, config.model, wc);

  Json j;
  j["command"] = "classify";
  j["config"] = echo_json(echo);
  j["field"] = field.filename().string();
  j["velocity"] = velocity ? Json(velocity->filename().string()) : Json(nullptr);
  j["domain"] = domain.fingerprint();
  j["well"] = well_json(wc);
  j["classification"] = classification_json(cls);
  const fs::path dir = prepare_dir(config.output_dir);
  write_json(dir / "classify_report.json", j);
  return j;
}

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("sweep axis '" + text + "' is not key=v1,v2,...");
  SweepAxis axis;
  axis.first = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  std::size_t start = 0;
  while (true) {
    const auto comma = rest.find(',', start);
    const std::string value = rest.substr(start, comma - start);
    if (value.empty()) throw ConfigError("sweep axis '" + axis.first + "' has an empty value");
    axis.second.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  bool known = false;
  for (const ConfigKey& k : config_keys()) known = known || axis.first == k.name;
  if (!known) throw ConfigError("unknown sweep key '" + axis.first + "'");
  if (axis.first == "output_dir") throw ConfigError("output_dir cannot be swept");
  return axis;
}

SweepSummary cmd_sweep(const ConfigMap& base, const std::vector<SweepAxis>& axes) {
  if (axes.empty()) throw ConfigError("sweep needs at least one --vary axis");
  for (const SweepAxis& a : axes)
    if (a.second.empty()) throw ConfigError("sweep axis '" + a.first + "' is empty");
  // Enumerate the grid, last axis fastest, dropping undamped points.
  std::size_t total = 1;
  for (const SweepAxis& a : axes) total *= a.second.size();
  std::vector<ConfigMap> points;
  std::vector<std::vector<std::string>> labels;
  for (std::size_t flat = 0; flat < total; ++flat) {
    ConfigMap m = default_config();
    for (const auto& [k, v] : base) m[k] = v;
    std::vector<std::string> values(axes.size());
    std::size_t rem = flat;
    for (std::size_t a = axes.size(); a-- > 0;) {
      values[a] = axes[a].second[rem % axes[a].second.size()];
      rem /= axes[a].second.size();
      m[axes[a].first] = values[a];
    }
    const bool undamped = m["diagnostic"] != "true" && std::strtod(m["omega"].c_str(), nullptr) == 0.0 &&
                          std::strtod(m["mu"].c_str(), nullptr) == 0.0;
    if (undamped) continue;
    points.push_back(std::move(m));
    labels.push_back(std::move(values));
  }

  if (points.empty()) throw ConfigError("sweep grid is empty once undamped points are removed");
  if (std::any_of(axes.begin(), axes.end(), [](const SweepAxis& a) { return a.first == "workers"; }))
    throw ConfigError("workers cannot be swept");
  const ExperimentConfig first = ExperimentConfig::from_map(points.front());
  const fs::path root = prepare_dir(first.output_dir);
  std::vector<SweepRow> rows(points.size());
  WellCache cache;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      SweepRow& row = rows[i];
      row.values = labels[i];
      char name[32];
      std::snprintf(name, sizeof name, "point_%04zu", i);
      ConfigMap m = points[i];
      m["output_dir"] = (root / name).string();
      try {
        const ExperimentConfig c = ExperimentConfig::from_map(m);
        const RunArtifacts art =
            run_with(c, m, [&](const Domain& d, double p) { return cache.get(d, p, c.minimize); });
        row.E0 = art.report["initial"]["E0"].get<double>();
        row.d = art.report["well"]["d"].get<double>();
        row.outcome = to_string(art.result.outcome.kind);
        row.t_max = art.result.outcome.t_max_estimate;
        if (art.certificate) {
          row.xi = art.certificate->xi;
          row.xi_fitted = art.certificate->xi_fitted;
          row.fit_r2 = art.certificate->fit_r2;
          row.violated_at = art.certificate->violated_at;
        }
      } catch (const std::exception& e) {
        row.outcome = dynamic_cast<const NumericalError*>(&e) ? "numerical_error" : "config_error";
        row.error = e.what();
      }
    }
  };
  int workers = first.workers > 0 ? first.workers
                                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::max(1, std::min<int>(workers, static_cast<int>(points.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  SweepSummary summary;
  summary.aggregate = root / "sweep.csv";
  std::ofstream out(summary.aggregate);
  if (!out) throw ConfigError("cannot write '" + summary.aggregate.string() + "'");
  out << "index";
  for (const SweepAxis& a : axes) out << ',' << a.first;
  out << ",E0,d,xi,xi_fitted,fit_r2,outcome,t_max_estimate,violated_at,error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    out << i;
    for (const std::string& v : r.values) out << ',' << csv_text(v);
    out << ',' << csv_number(r.E0) << ',' << csv_number(r.d) << ',' << csv_number(r.xi) << ','
        << csv_number(r.xi_fitted) << ',' << csv_number(r.fit_r2) << ',' << r.outcome << ','
        << (r.t_max ? csv_number(*r.t_max) : "") << ','
        << (r.violated_at ? csv_number(*r.violated_at) : "") << ',' << csv_text(r.error) << '\n';
    if (!r.error.empty()) ++summary.failed;
  }
  summary.rows = rows.size();
  return summary;
}

}  // namespace dampwave::cli
