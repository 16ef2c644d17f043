#include "dampwave/functionals.hpp"

#include <cmath>

#include "dampwave/error.hpp"

namespace dampwave {

std::string to_string(SpatialOperator op) {
  return op == SpatialOperator::laplacian ? "laplacian" : "mean_curvature";
}

SpatialOperator spatial_operator_from_string(const std::string& name) {
  if (name == "laplacian") return SpatialOperator::laplacian;
  if (name == "mean_curvature") return SpatialOperator::mean_curvature;
  throw ConfigError("unknown spatial operator '" + name + "'");
}

void ModelParams::validate() const {
  if (!(p > 2.0) || !std::isfinite(p)) throw ConfigError("source exponent p must exceed 2");
  if (!(omega >= 0.0) || !(mu >= 0.0) || !std::isfinite(omega) || !std::isfinite(mu))
    throw ConfigError("damping coefficients must be non-negative");
  if (!(omega + mu > 0.0) && !diagnostic)
    throw ConfigError("at least one damping coefficient must be positive (omega = mu = 0 "
                      "is only allowed in diagnostic mode)");
}

SimState::SimState(double time, GridField displacement, GridField velocity)
    : t(time), u(std::move(displacement)), v(std::move(velocity)) {
  if (!(u.domain() == v.domain())) throw ConfigError("state fields live on different domains");
}

SimState SimState::zero(const Domain& domain) {
  return SimState(0.0, GridField(domain), GridField(domain));
}

namespace {

// The source potential drops out of every functional when the source is off.
double source_term(const GridField& u, const ModelParams& params) {
  return params.source_active() ? lp_norm_p(u, params.p) : 0.0;
}

}  // namespace

double functional_I(const GridField& u, const ModelParams& params) {
  return grad_norm_sq(u) - source_term(u, params);
}

double functional_J(const GridField& u, const ModelParams& params) {
  return 0.5 * grad_norm_sq(u) - source_term(u, params) / params.p;
}

EnergyReport total_energy(const SimState& state, const ModelParams& params) {
  EnergyReport r;
  r.t = state.t;
  r.grad_sq = grad_norm_sq(state.u);
  r.lp_p = lp_norm_p(state.u, params.p);
  r.kinetic = 0.5 * l2_norm_sq(state.v);
  const double potential = params.source_active() ? r.lp_p : 0.0;
  r.I = r.grad_sq - potential;
  r.J = 0.5 * r.grad_sq - potential / params.p;
  r.E = r.J + r.kinetic;
  return r;
}

double dissipation_rate(const GridField& velocity, const ModelParams& params) {
  double rate = 0.0;
  if (params.omega != 0.0) rate -= params.omega * grad_norm_sq(velocity);
  if (params.mu != 0.0) rate -= params.mu * l2_norm_sq(velocity);
  return rate;
}

double dissipation_rate(const SimState& state, const ModelParams& params) {
  return dissipation_rate(state.v, params);
}

void apply_source(std::span<const double> u, double p, std::span<double> out) {
  if (p == 4.0) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * u[i] * u[i];
    return;
  }
  if (p == 3.0) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * std::abs(u[i]);
    return;
  }
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * std::pow(std::abs(u[i]), p - 2.0);
}

}  // namespace dampwave
