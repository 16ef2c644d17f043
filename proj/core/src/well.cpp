#include "dampwave/well.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "dampwave/error.hpp"

namespace dampwave {

ExponentCheck validate_exponent(double p, int dim, double omega) {
  ExponentCheck check;
  if (dim >= 3) {
    const double n = dim;
    check.p_bar = omega > 0.0 ? 2.0 * n / (n - 2.0) : (2.0 * n - 2.0) / (n - 2.0);
  }
  check.ok = p > 2.0 && p <= check.p_bar;
  return check;
}

namespace {

struct StartOutcome {
  double ratio = std::numeric_limits<double>::infinity();  // ‖∇u‖₂ / ‖u‖ₚ
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> u;
};

void normalize_lp(const Domain& domain, std::vector<double>& u, double p) {
  GridField view(domain, std::move(u));
  const double scale = std::pow(lp_norm_p(view, p), -1.0 / p);
  view *= scale;
  u.assign(view.values().begin(), view.values().end());
}

// Minimizes log R(u) = ½ log ‖∇u‖₂² − (1/p) log ‖u‖ₚᵖ on the sphere ‖u‖ₚ = 1.
// The search direction is the H¹ gradient s = u/G − A⁻¹f(u) (at ‖u‖ₚ = 1), so a
// unit step τ = G reproduces nonlinear inverse iteration; BB steps accelerate it.
StartOutcome minimize_from(const Domain& domain, double p, std::vector<double> start,
                           const ShiftedStiffnessSolver& inverse, const MinimizeOpts& opts) {
  const std::size_t n = domain.size();
  const double w = domain.cell_volume();
  StartOutcome out;

  std::vector<double> u = std::move(start);
  normalize_lp(domain, u, p);
  std::vector<double> f(n), af(n), s(n), g(n), u_prev(n), g_prev(n), au(n);

  double tau = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    GridField uf(domain, u);
    const double G = grad_norm_sq(uf);
    apply_source(u, p, f);
    inverse.solve(f, af);
    apply_stiffness(domain, u, au);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u[i] / G - af[i];
      g[i] = au[i] / G - f[i];  // L² gradient; equals A·s
    }
    const double rel = std::sqrt(G * grad_norm_sq(GridField(domain, s)));
    out.residual = rel;
    out.iterations = it;
    out.ratio = std::sqrt(G);
    if (!std::isfinite(rel)) break;
    if (rel < opts.tol) {
      out.converged = true;
      break;
    }

    if (it == 0) {
      tau = G;
    } else {
      double num = 0.0;
      double den = 0.0;
      std::vector<double> du(n);
      for (std::size_t i = 0; i < n; ++i) {
        du[i] = u[i] - u_prev[i];
        den += du[i] * (g[i] - g_prev[i]);
      }
      num = grad_norm_sq(GridField(domain, du)) / w;
      tau = num / den;
      if (!(tau > 0.0) || !std::isfinite(tau)) tau = G;
      tau = std::clamp(tau, 1e-3 * G, 1e3 * G);
    }

    u_prev = u;
    g_prev = g;
    for (std::size_t i = 0; i < n; ++i) u[i] -= tau * s[i];
    normalize_lp(domain, u, p);
  }
  out.u = std::move(u);
  return out;
}

std::vector<double> random_start(std::size_t n, std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> u(n);
  for (double& x : u) x = dist(rng);
  return u;
}

}  // namespace

CStarResult compute_c_star(const Domain& domain, double p, const MinimizeOpts& opts) {
  const ExponentCheck check = validate_exponent(p, domain.dim(), 1.0);
  if (!check.ok) throw ConfigError("exponent p is outside (2, p_bar]");
  if (opts.random_starts < 0 || (opts.random_starts == 0 && !opts.eigenmode_start))
    throw ConfigError("compute_c_star needs at least one start");

  const ShiftedStiffnessSolver inverse(domain, 0.0, 1.0);
  std::vector<std::vector<double>> starts;
  if (opts.eigenmode_start) {
    const GridField phi = first_eigenmode(domain);
    starts.emplace_back(phi.values().begin(), phi.values().end());
  }
  for (int k = 0; k < opts.random_starts; ++k)
    starts.push_back(random_start(domain.size(), opts.seed, k));

  std::vector<StartOutcome> outcomes(starts.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < starts.size();)
      outcomes[k] = minimize_from(domain, p, std::move(starts[k]), inverse, opts);
  };
  unsigned threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(starts.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  // Argmin over converged starts; ties resolved by start index.
  std::size_t best = outcomes.size();
  int converged = 0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!outcomes[k].converged) continue;
    ++converged;
    if (best == outcomes.size() || outcomes[k].ratio < outcomes[best].ratio) best = k;
  }
  if (best == outcomes.size()) {
    double last = std::numeric_limits<double>::infinity();
    for (const auto& o : outcomes) last = std::min(last, o.residual);
    std::ostringstream msg;
    msg << "C* minimization did not converge in " << opts.max_iter
        << " iterations; smallest residual " << last;
    throw NumericalError(msg.str());
  }

  StartOutcome& b = outcomes[best];
  GridField minimizer(domain, std::move(b.u));
  const auto extreme = std::max_element(
      minimizer.values().begin(), minimizer.values().end(),
      [](double a, double c) { return std::abs(a) < std::abs(c); });
  if (*extreme < 0.0) minimizer *= -1.0;
  const double norm = lp_norm_p(minimizer, p);
  minimizer *= std::pow(norm, -1.0 / p);
  const double c_star = 1.0 / std::sqrt(grad_norm_sq(minimizer));
  return CStarResult{c_star, std::move(minimizer), b.residual, b.iterations, converged};
}

double poincare_constant(const Domain& domain, double tol, int max_iter) {
  const ShiftedStiffnessSolver inverse(domain, 0.0, 1.0);
  GridField x(domain);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0;
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    GridField y = inverse.solve(x);
    y *= 1.0 / std::sqrt(l2_norm_sq(y));
    const double next = grad_norm_sq(y) / l2_norm_sq(y);
    x = std::move(y);
    if (it > 0 && std::abs(next - lambda) <= tol * next) return next;
    lambda = next;
  }
  return lambda;
}

WellConstants WellConstants::from_c_star(double c_star, double p, double lambda1) {
  if (!(c_star > 0.0) || !(p > 2.0)) throw ConfigError("well constants need C* > 0 and p > 2");
  WellConstants wc;
  wc.c_star = c_star;
  wc.p = p;
  wc.lambda1 = lambda1;
  wc.d = (p - 2.0) / (2.0 * p) * std::pow(c_star, -2.0 * p / (p - 2.0));
  wc.beta = std::sqrt(2.0 * wc.d * p / (p - 2.0));
  return wc;
}

double WellConstants::admissibility(double E0) const {
  if (!(E0 > 0.0)) return 0.0;
  return std::pow(c_star, p) * std::pow(2.0 * p / (p - 2.0) * E0, (p - 2.0) / 2.0);
}

WellConstants well_constants(const Domain& domain, double p, const MinimizeOpts& opts) {
  CStarResult cs = compute_c_star(domain, p, opts);
  WellConstants wc = WellConstants::from_c_star(cs.c_star, p, poincare_constant(domain));
  wc.domain_fingerprint = domain.fingerprint();
  wc.ground_state = std::move(cs.minimizer);
  return wc;
}

double nehari_scale(const GridField& u, double p) {
  if (u.is_zero()) throw ConfigError("nehari_scale is undefined for the zero field");
  return std::pow(grad_norm_sq(u) / lp_norm_p(u, p), 1.0 / (p - 2.0));
}

std::string to_string(NehariSet set) {
  switch (set) {
    case NehariSet::N_plus: return "N_plus";
    case NehariSet::N_zero: return "N_zero";
    case NehariSet::N_minus: return "N_minus";
  }
  return "unknown";
}

double nehari_tolerance(double grad_sq, double lp_p) { return 1e-9 * std::max(grad_sq, lp_p); }

Classification classify(const SimState& state, const ModelParams& params,
                        const WellConstants& wc) {
  if (!wc.domain_fingerprint.empty() && wc.domain_fingerprint != state.u.domain().fingerprint())
    throw ConfigError("well constants were computed on a different domain");
  if (params.p != wc.p) throw ConfigError("well constants were computed for a different p");

  const EnergyReport e = total_energy(state, params);
  Classification c;
  c.I = e.I;
  c.J = e.J;
  c.E = e.E;
  c.tol_I = nehari_tolerance(e.grad_sq, e.lp_p);
  if (state.u.is_zero() || c.I > c.tol_I)
    c.set = NehariSet::N_plus;
  else if (c.I < -c.tol_I)
    c.set = NehariSet::N_minus;
  else
    c.set = NehariSet::N_zero;
  c.in_W = c.J <= wc.d && c.set == NehariSet::N_plus;
  c.in_U = c.J <= wc.d && c.set == NehariSet::N_minus;
  c.high_energy = c.E >= wc.d;
  c.admissibility = wc.admissibility(c.E);
  c.admissible = c.admissibility < 1.0;
  return c;
}

namespace {

// J(s·φ) = ½s²G − sᵖP/p for the fixed shape φ.
struct ScalingProfile {
  double G;
  double P;
  double p;
  double operator()(double s) const { return 0.5 * s * s * G - std::pow(s, p) * P / p; }
  double peak() const { return std::pow(G / P, 1.0 / (p - 2.0)); }
};

double bisect(const ScalingProfile& J, double lo, double hi, double target, bool increasing) {
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const bool below = J(mid) < target;
    if (below == increasing)
      lo = mid;
    else
      hi = mid;
  }
  const double jl = std::abs(J(lo) - target);
  const double jh = std::abs(J(hi) - target);
  return jl <= jh ? lo : hi;
}

}  // namespace

InitialData prepare_initial_data(const GridField& shape, const ModelParams& params,
                                 const WellConstants& wc, InitialTarget target) {
  if (shape.is_zero()) throw ConfigError("initial-data shape must be nonzero");
  const ScalingProfile J{grad_norm_sq(shape), lp_norm_p(shape, params.p), params.p};
  const double peak = J.peak();
  const double level = target.fraction * wc.d;
  const double top = J(peak);

  double s = 0.0;
  if (target.kind == InitialTarget::Kind::stable) {
    if (!(target.fraction > 0.0 && target.fraction < 1.0))
      throw ConfigError("stable target fraction must lie in (0, 1)");
    if (level >= top) throw ConfigError("stable target level exceeds the shape's mountain pass");
    s = bisect(J, 0.0, peak, level, true);
  } else {
    if (level >= top) throw ConfigError("unstable target level exceeds the shape's mountain pass");
    double hi = 2.0 * peak;
    while (J(hi) >= level) hi *= 2.0;
    s = bisect(J, peak, hi, level, false);
  }
  GridField u0 = s * shape;
  GridField u1(shape.domain());
  return InitialData{std::move(u0), std::move(u1), s};
}

InitialData prepare_initial_data(const Domain& domain, const ModelParams& params,
                                 const WellConstants& wc, InitialTarget target,
                                 InitialShape shape) {
  if (shape == InitialShape::ground_state) {
    if (!wc.ground_state || !(wc.ground_state->domain() == domain))
      throw ConfigError("well constants carry no ground state for this domain");
    return prepare_initial_data(*wc.ground_state, params, wc, target);
  }
  return prepare_initial_data(first_eigenmode(domain), params, wc, target);
}

}  // namespace dampwave
