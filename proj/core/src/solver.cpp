#include "dampwave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dampwave {

void StepConfig::validate(const ModelParams& params) const {
  if (!std::isfinite(dt) || dt == 0.0) throw ConfigError("time step must be finite and nonzero");
  if (dt < 0.0 && !params.diagnostic)
    throw ConfigError("negative time steps are only allowed in diagnostic mode");
  if (!(picard_tol > 0.0) || picard_max < 1) throw ConfigError("invalid Picard settings");
  if (!(linear_solver_tol > 0.0)) throw ConfigError("linear solver tolerance must be positive");
}

Stepper::Stepper(const Domain& domain, const ModelParams& params, const StepConfig& cfg)
    : domain_(domain),
      params_(params),
      cfg_(cfg),
      solver_((params.validate(), cfg.validate(params), domain), 2.0 + cfg.dt * params.mu,
              0.5 * cfg.dt * cfg.dt + cfg.dt * params.omega, cfg.linear_solver_tol),
      rhs_base_(domain.size()),
      rhs_(domain.size()),
      vm_(domain.size()),
      um_(domain.size()),
      um_next_(domain.size()),
      work_(domain.size()),
      au_(domain.size()) {}

StepInfo Stepper::advance(SimState& state) {
  if (!(state.u.domain() == domain_)) throw ConfigError("state does not live on the stepper's domain");
  const std::size_t n = domain_.size();
  const double dt = cfg_.dt;
  const auto u0 = state.u.values();
  const auto v0 = state.v.values();
  const bool source = params_.source_active();
  const bool curvature = params_.op == SpatialOperator::mean_curvature;

  // (2 + dtμ)·vm + (dt²/2 + dtω)·A·vm = 2v0 − dt·A·u0 + dt·g(um)
  apply_stiffness(domain_, u0, au_);
  for (std::size_t i = 0; i < n; ++i) {
    rhs_base_[i] = 2.0 * v0[i] - dt * au_[i];
    um_[i] = u0[i] + 0.5 * dt * v0[i];
  }

  StepInfo info;
  const bool linear = !source && !curvature;
  for (int it = 1; it <= cfg_.picard_max; ++it) {
    std::copy(rhs_base_.begin(), rhs_base_.end(), rhs_.begin());
    if (source) {
      apply_source(um_, params_.p, work_);
      for (std::size_t i = 0; i < n; ++i) rhs_[i] += dt * work_[i];
    }
    if (curvature) {
      // Implicit A·um stays in the matrix; the remainder N(um) − A·um is lagged.
      apply_mean_curvature(domain_, um_, work_);
      apply_stiffness(domain_, um_, au_);
      for (std::size_t i = 0; i < n; ++i) rhs_[i] -= dt * (work_[i] - au_[i]);
    }
    solver_.solve(rhs_, vm_);

    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      um_next_[i] = u0[i] + 0.5 * dt * vm_[i];
      diff = std::max(diff, std::abs(um_next_[i] - um_[i]));
      scale = std::max(scale, std::abs(um_next_[i]));
    }
    info.picard_iterations = it;
    info.picard_increment = scale > 0.0 ? diff / scale : diff;
    if (!std::isfinite(info.picard_increment)) break;
    std::swap(um_, um_next_);
    if (linear || info.picard_increment <= cfg_.picard_tol) {
      GridField v_mid(domain_, vm_);
      info.dissipation_mid = dissipation_rate(v_mid, params_);
      auto u = state.u.values();
      auto v = state.v.values();
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = u[i] + dt * vm_[i];
        v[i] = 2.0 * vm_[i] - v[i];
      }
      state.t += dt;
      return info;
    }
  }
  std::ostringstream msg;
  msg << "Picard iteration did not converge at t = " << state.t << " (increment "
      << info.picard_increment << " after " << info.picard_iterations << " iterations)";
  throw StepFailure(msg.str());
}

SimState step(const SimState& state, const ModelParams& params, const StepConfig& cfg) {
  Stepper stepper(state.u.domain(), params, cfg);
  SimState next = state;
  stepper.advance(next);
  return next;
}

double Sample::blowup_norm() const { return std::sqrt(grad_sq) + std::sqrt(l2_v); }

Sample make_sample(const SimState& state, const ModelParams& params, double epsilon) {
  const EnergyReport e = total_energy(state, params);
  Sample s;
  s.t = state.t;
  s.E = e.E;
  s.I = e.I;
  s.J = e.J;
  s.kinetic = e.kinetic;
  s.grad_sq = e.grad_sq;
  s.lp_p = e.lp_p;
  s.l2_v = 2.0 * e.kinetic;
  s.grad_v_sq = grad_norm_sq(state.v);
  s.cross = inner(state.v, state.u);
  s.L = perturbed_energy(e, s.cross, epsilon, params.omega);
  return s;
}

void TimeSeries::write_csv(std::ostream& out) const {
  out << csv_header << '\n';
  char buf[512];
  for (const Sample& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  s.t, s.E, s.I, s.J, s.L, s.kinetic, s.grad_sq, s.lp_p, s.l2_v, s.grad_v_sq);
    out << buf;
  }
}

void TimeSeries::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_csv(out);
}

TimeSeries TimeSeries::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != csv_header)
    throw ConfigError("time series CSV: unexpected header");
  TimeSeries series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double col[10];
    std::istringstream row(line);
    std::string cell;
    int k = 0;
    while (k < 10 && std::getline(row, cell, ',')) col[k++] = std::stod(cell);
    if (k != 10) throw ConfigError("time series CSV: expected 10 columns");
    Sample s;
    s.t = col[0];
    s.E = col[1];
    s.I = col[2];
    s.J = col[3];
    s.L = col[4];
    s.kinetic = col[5];
    s.grad_sq = col[6];
    s.lp_p = col[7];
    s.l2_v = col[8];
    s.grad_v_sq = col[9];
    series.samples.push_back(s);
  }
  return series;
}

namespace {

struct PoleFit {
  double ssr = std::numeric_limits<double>::infinity();
  double alpha = 0.0;
};

// Linear regression of log y on log(T − t).
PoleFit pole_residual(std::span<const double> t, std::span<const double> logy, double T) {
  const std::size_t n = t.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = std::log(T - t[k]);
    sx += x[k];
    sy += logy[k];
    sxx += x[k] * x[k];
    sxy += x[k] * logy[k];
  }
  const double denom = n * sxx - sx * sx;
  PoleFit fit;
  if (!(denom > 0.0)) return fit;
  const double slope = (n * sxy - sx * sy) / denom;
  const double icept = (sy - slope * sx) / n;
  fit.ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = logy[k] - (icept + slope * x[k]);
    fit.ssr += r * r;
  }
  fit.alpha = -slope;
  return fit;
}

}  // namespace

double fit_pole(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  if (n == 0) throw ConfigError("fit_pole needs samples");
  const double t_last = t[n - 1];
  if (n < 3) return t_last;
  const double span = std::max(t_last - t[0], std::numeric_limits<double>::min());
  std::vector<double> logy(n);
  for (std::size_t k = 0; k < n; ++k) logy[k] = std::log(std::max(y[k], 1e-300));

  // Coarse log-spaced scan of the gap g = T − t_last, then golden section.
  const double lo = std::log(1e-9 * span);
  const double hi = std::log(1e3 * span);
  constexpr int grid = 240;
  double best_x = hi;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= grid; ++k) {
    const double x = lo + (hi - lo) * k / grid;
    const PoleFit f = pole_residual(t, logy, t_last + std::exp(x));
    if (f.alpha > 0.0 && f.ssr < best) {
      best = f.ssr;
      best_x = x;
    }
  }
  if (!std::isfinite(best)) return t_last;

  const double step = (hi - lo) / grid;
  double a = best_x - step;
  double b = best_x + step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  const auto obj = [&](double x) { return pole_residual(t, logy, t_last + std::exp(x)).ssr; };
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = obj(c);
  double fd = obj(d);
  for (int it = 0; it < 100; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = obj(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = obj(d);
    }
  }
  return t_last + std::exp(0.5 * (a + b));
}

std::optional<double> detect_blowup(const TimeSeries& series, const BlowupThresholds& thresholds,
                                    bool step_failed) {
  const auto& s = series.samples;
  if (s.empty()) throw ConfigError("detect_blowup needs a nonempty series");

  std::size_t end = s.size();  // samples [0, end) feed the pole fit
  bool fired = false;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double norm = s[k].blowup_norm();
    if (!std::isfinite(norm) || norm > thresholds.norm_threshold) {
      fired = true;
      end = std::isfinite(norm) ? k + 1 : k;
      break;
    }
  }
  if (!fired && step_failed) {
    const std::size_t w = static_cast<std::size_t>(std::max(thresholds.growth_window, 1));
    if (s.size() > w) {
      bool growing = true;
      for (std::size_t k = s.size() - w; k < s.size(); ++k)
        growing = growing && s[k].blowup_norm() > s[k - 1].blowup_norm();
      fired = growing;
    }
  }
  if (!fired) return std::nullopt;
  if (end == 0) return s.front().t;

  const std::size_t m = std::min<std::size_t>(end, std::max(thresholds.fit_samples, 3));
  std::vector<double> t(m), y(m);
  for (std::size_t k = 0; k < m; ++k) {
    t[k] = s[end - m + k].t;
    y[k] = s[end - m + k].blowup_norm();
  }
  return fit_pole(t, y);
}

std::string to_string(RunOutcome::Kind kind) {
  switch (kind) {
    case RunOutcome::Kind::completed: return "completed";
    case RunOutcome::Kind::blew_up: return "blew_up";
    case RunOutcome::Kind::monitor_violation: return "monitor_violation";
  }
  return "unknown";
}

namespace {

std::string describe(const char* what, double t, double value, double bound) {
  std::ostringstream msg;
  msg.precision(17);
  msg << what << " at t = " << t << ": " << value << " vs bound " << bound;
  return msg.str();
}

}  // namespace

RunResult run(const SimState& initial, const ModelParams& params, const StepConfig& cfg,
              const RunOptions& options) {
  params.validate();
  cfg.validate(params);
  if (!(options.horizon > 0.0)) throw ConfigError("run horizon must be positive");
  if (!initial.u.is_finite() || !initial.v.is_finite())
    throw ConfigError("initial state contains non-finite values");
  MonitorSet monitors = options.monitors;
  if (params.diagnostic) monitors = MonitorSet::none();
  const bool heuristic = params.op == SpatialOperator::mean_curvature;

  const Domain& domain = initial.u.domain();
  const int stride = options.sample_stride > 0 ? options.sample_stride
                                               : (domain.size() <= 255 ? 1 : 10);
  const double dt = cfg.dt;
  const long n_steps = static_cast<long>(std::ceil(options.horizon / std::abs(dt) - 1e-9));

  RunResult result{TimeSeries{options.lyapunov_epsilon, params.omega, {}}, RunOutcome{}, initial};
  SimState& state = result.final_state;
  Stepper stepper(domain, params, cfg);

  Sample current = make_sample(state, params, options.lyapunov_epsilon);
  result.series.samples.push_back(current);
  const double E0 = current.E;
  const double ratio = 2.0 * params.p / (params.p - 2.0);
  const double energy_tol =
      monitors.energy_tol_factor * std::abs(dt * dt * dt) * std::max(std::abs(E0), 1.0);

  const auto finish_blowup = [&](bool step_failed) {
    auto estimate = detect_blowup(result.series, options.blowup, step_failed);
    if (!estimate) return false;
    result.outcome.kind = RunOutcome::Kind::blew_up;
    result.outcome.time = state.t;
    result.outcome.t_max_estimate = estimate;
    return true;
  };

  for (long k = 1; k <= n_steps; ++k) {
    const double t0 = initial.t;
    StepInfo info;
    try {
      info = stepper.advance(state);
    } catch (const StepFailure& failure) {
      if (result.series.samples.back().t != state.t) result.series.samples.push_back(current);
      if (finish_blowup(true)) return result;
      throw NumericalError(std::string(failure.what()) +
                           "; norms are not growing, so the time step is too large");
    }
    state.t = t0 + k * dt;
    ++result.steps;

    const Sample next = make_sample(state, params, options.lyapunov_epsilon);
    const bool record = k % stride == 0 || k == n_steps;
    if (!std::isfinite(next.E)) {
      if (finish_blowup(true)) return result;
      throw NumericalError("state became non-finite without norm growth");
    }

    const double residual = (next.E - current.E) - dt * info.dissipation_mid;
    result.energy_drift += std::abs(residual);
    result.max_step_residual = std::max(result.max_step_residual, std::abs(residual));

    std::string violation;
    if (monitors.nehari && !heuristic) {
      const double tol_I = 1e-9 * std::max(next.grad_sq, next.lp_p);
      // The zero state belongs to the stable set although I(0) = 0 = tol_I.
      if (!(next.I > -tol_I) && next.grad_sq > 0.0) violation = describe("Nehari monitor: I(u) below -tol_I", next.t, next.I, -tol_I);
    }
    if (violation.empty() && monitors.gradient_bound && !heuristic) {
      const double bound = ratio * E0 * (1.0 + 1e-6);
      if (next.grad_sq > bound) violation = describe("gradient bound exceeded", next.t, next.grad_sq, bound);
    }
    if (violation.empty() && monitors.uniform_bound && !heuristic) {
      const double bound = (ratio + 2.0) * E0 * (1.0 + 1e-6);
      const double value = next.grad_sq + next.l2_v;
      if (value > bound) violation = describe("uniform bound exceeded", next.t, value, bound);
    }
    if (violation.empty() && monitors.energy_decay && next.E > current.E + energy_tol) {
      if (heuristic)
        ++result.heuristic_energy_increases;
      else
        violation = describe("energy increased", next.t, next.E - current.E, energy_tol);
    }
    current = next;

    if (!violation.empty() || record) result.series.samples.push_back(current);
    if (!violation.empty()) {
      result.outcome.kind = RunOutcome::Kind::monitor_violation;
      result.outcome.time = state.t;
      result.outcome.details = violation;
      return result;
    }
    if (current.blowup_norm() > options.blowup.norm_threshold) {
      if (!record) result.series.samples.push_back(current);
      if (finish_blowup(false)) return result;
    }
  }
  result.outcome.kind = RunOutcome::Kind::completed;
  result.outcome.time = state.t;
  return result;
}

}  // namespace dampwave
