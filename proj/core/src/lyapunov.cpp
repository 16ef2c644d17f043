#include "dampwave/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "dampwave/error.hpp"

namespace dampwave {

double lyapunov_L(const SimState& state, const ModelParams& params, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("Lyapunov functional needs epsilon > 0");
  return perturbed_energy(total_energy(state, params), inner(state.v, state.u), epsilon,
                          params.omega);
}

ChainContext chain_context(double E0, const ModelParams& params, const WellConstants& wc) {
  params.validate();
  if (params.p != wc.p) throw ConfigError("well constants were computed for a different p");
  if (!(wc.lambda1 > 0.0)) throw ConfigError("well constants lack the Poincare constant");
  if (!(E0 < wc.d) || !wc.admissible(E0))
    throw ConfigError("decay hypotheses unmet: initial energy is not below the well depth");
  ChainContext c;
  c.K = wc.admissibility(E0);
  c.lambda1 = wc.lambda1;
  c.c0 = std::max(1.0, params.p / ((params.p - 2.0) * wc.lambda1));
  c.l2_embedding_sq = std::max(wc.c_star * wc.c_star, 1.0 / wc.lambda1);
  c.mu = params.mu;
  c.omega = params.omega;
  c.p = params.p;
  return c;
}

DecayCertificate DecayCertificate::build(const ChainContext& context, double delta, double eta,
                                         double M, double epsilon) {
  DecayCertificate cert;
  cert.context = context;
  cert.delta = delta;
  cert.eta = eta;
  cert.M = M;
  cert.epsilon = epsilon;
  cert.beta1 = 1.0 - epsilon * context.c0;
  cert.beta2 = 1.0 + epsilon * context.c0 + epsilon * context.omega * context.p / (context.p - 2.0);
  cert.xi = M * epsilon / cert.beta2;
  cert.validate();
  return cert;
}

void DecayCertificate::validate() const {
  const ChainContext& c = context;
  const auto fail = [](const char* what) {
    throw ConfigError(std::string("invalid decay certificate: ") + what);
  };
  if (!(c.K >= 0.0 && c.K < 1.0)) fail("K must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(eta > 0.0) || !(M > 0.0)) fail("eta and M must be positive");
  if (M > 2.0 * eta) fail("M must not exceed 2*eta");
  if (c.mu > 0.0) {
    if (!(delta > 0.0)) fail("delta must be positive");
    if (!(c.mu * c.l2_embedding_sq * delta + c.K - 1.0 < 0.0)) fail("delta too large");
    // η sits exactly on this bound in the default chain; allow for rounding.
    if (eta > (1.0 - c.K - c.mu * c.l2_embedding_sq * delta) * (1.0 + 1e-14))
      fail("eta too large for delta");
    if (!(epsilon * (c.mu / (4.0 * delta) + 1.0 + M / 2.0) - c.mu < 0.0))
      fail("epsilon too large for the velocity term");
  } else {
    if (!(c.omega > 0.0)) fail("one damping coefficient must be positive");
    if (eta > 1.0 - c.K) fail("eta too large");
    if (!(epsilon * (1.0 + M / 2.0) - c.omega * c.lambda1 < 0.0))
      fail("epsilon too large for the strong-damping bound");
  }
  if (!(beta1 > 0.0)) fail("beta1 must be positive");
  if (!(beta1 <= beta2)) fail("beta1 must not exceed beta2");
  if (!(xi > 0.0)) fail("xi must be positive");
}

DecayCertificate select_constants(double E0, const ModelParams& params, const WellConstants& wc) {
  const ChainContext c = chain_context(E0, params, wc);
  const double gap = 1.0 - c.K;
  const double eta = 0.5 * gap;
  const double M = eta;
  double delta = 0.0;
  double eps_damping = 0.0;
  if (c.mu > 0.0) {
    delta = gap / (2.0 * c.mu * c.l2_embedding_sq);
    eps_damping = c.mu / (c.mu / (4.0 * delta) + 1.0 + M / 2.0);
  } else {
    // Without friction the velocity term is absorbed by −ω‖∇u_t‖₂² ≤ −ωλ₁‖u_t‖₂².
    eps_damping = c.omega * c.lambda1 / (1.0 + M / 2.0);
  }
  const double epsilon = 0.5 * std::min(eps_damping, 1.0 / (2.0 * c.c0));
  return DecayCertificate::build(c, delta, eta, M, epsilon);
}

LogLinearFit fit_log_linear(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  if (n < 2 || y.size() != n) throw ConfigError("log-linear fit needs at least two points");
  double mt = 0.0, my = 0.0;
  std::vector<double> ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(y[k] > 0.0)) throw NumericalError("log-linear fit on a non-positive value");
    ly[k] = std::log(y[k]);
    mt += t[k];
    my += ly[k];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    stt += (t[k] - mt) * (t[k] - mt);
    sty += (t[k] - mt) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  LogLinearFit fit;
  fit.count = n;
  fit.slope = sty / stt;
  fit.intercept = my - fit.slope * mt;
  double ssr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ly[k] - (fit.intercept + fit.slope * t[k]);
    ssr += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return fit;
}

DecayCertificate certify_decay(const TimeSeries& series, DecayCertificate cert, double tol_cert) {
  const auto& s = series.samples;
  if (s.size() < 2) throw ConfigError("certification needs at least two samples");
  if (series.epsilon != cert.epsilon)
    throw ConfigError("series L column was computed with a different epsilon");
  const double E0 = s.front().E;
  if (!(E0 > 0.0)) throw NumericalError("certification data error: E(0) is not positive");

  const double cutoff = 1e-12 * E0;
  std::size_t window = 0;
  while (window < s.size() && s[window].E >= cutoff) ++window;
  if (window < s.size() && !(s[window].E > 0.0)) {
    std::ostringstream msg;
    msg << "certification data error: E(t) = " << s[window].E << " at t = " << s[window].t
        << " before decaying below the fit cutoff";
    throw NumericalError(msg.str());
  }

  cert.violated_at.reset();
  for (std::size_t k = 0; k + 1 < window; ++k) {
    const double dt = s[k + 1].t - s[k].t;
    const double bound = s[k].L * std::exp(-cert.xi * dt) * (1.0 + tol_cert);
    if (s[k + 1].L > bound) {
      cert.violated_at = s[k + 1].t;
      break;
    }
  }

  std::vector<double> t(window), e(window);
  for (std::size_t k = 0; k < window; ++k) {
    t[k] = s[k].t;
    e[k] = s[k].E;
  }
  if (window >= 2) {
    const LogLinearFit fit = fit_log_linear(t, e);
    cert.xi_fitted = -fit.slope;
    cert.fit_r2 = fit.r2;
  }
  return cert;
}

EquivalenceReport equivalence_check(const TimeSeries& series, const DecayCertificate& cert,
                                    double rel_tol) {
  if (series.epsilon != cert.epsilon)
    throw ConfigError("series L column was computed with a different epsilon");
  EquivalenceReport report;
  for (const Sample& s : series.samples) {
    ++report.checked;
    const double slack = rel_tol * std::abs(s.E);
    const bool ok = cert.beta1 * s.E - slack <= s.L && s.L <= cert.beta2 * s.E + slack;
    if (s.E != 0.0) {
      report.min_ratio = std::min(report.min_ratio, s.L / s.E);
      report.max_ratio = std::max(report.max_ratio, s.L / s.E);
    }
    if (!ok) {
      ++report.violations;
      if (!report.first_violation) report.first_violation = s.t;
    }
  }
  return report;
}

}  // namespace dampwave
