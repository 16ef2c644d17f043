#pragma once

#include <string>

#include "dampwave/mesh.hpp"

namespace dampwave {

enum class SpatialOperator { laplacian, mean_curvature };

std::string to_string(SpatialOperator op);
SpatialOperator spatial_operator_from_string(const std::string& name);

/// Coefficients of u_tt + A(u) + ω·A·u_t + μ·u_t = u|u|^{p−2}.
struct ModelParams {
  double omega = 0.0;  // strong (Kelvin–Voigt) damping
  double mu = 1.0;     // frictional damping
  double p = 4.0;      // source exponent
  SpatialOperator op = SpatialOperator::laplacian;
  // Diagnostic mode: permits ω = μ = 0 and negative time steps; monitors off.
  bool diagnostic = false;
  // Source switch, honoured in diagnostic mode only.
  bool source = true;

  /// Throws ConfigError unless p > 2, ω, μ ≥ 0 and (ω + μ > 0 or diagnostic).
  void validate() const;
  bool source_active() const { return source || !diagnostic; }
};

/// Discrete state (t, u, u_t).
struct SimState {
  double t = 0.0;
  GridField u;
  GridField v;

  SimState(double time, GridField displacement, GridField velocity);
  static SimState zero(const Domain& domain);
};

/// Energy decomposition at one instant. The norms are cached so that
/// monitors can test inequalities without recomputing them.
struct EnergyReport {
  double t = 0.0;
  double I = 0.0;
  double J = 0.0;
  double E = 0.0;
  double kinetic = 0.0;  // ½‖u_t‖₂²
  double grad_sq = 0.0;  // ‖∇u‖₂²
  double lp_p = 0.0;     // ‖u‖ₚᵖ
};

/// ‖∇u‖₂² − ‖u‖ₚᵖ
double functional_I(const GridField& u, const ModelParams& params);
/// ½‖∇u‖₂² − (1/p)‖u‖ₚᵖ
double functional_J(const GridField& u, const ModelParams& params);
EnergyReport total_energy(const SimState& state, const ModelParams& params);
/// −ω‖∇u_t‖₂² − μ‖u_t‖₂², the exact energy rate of the continuous problem.
double dissipation_rate(const SimState& state, const ModelParams& params);
double dissipation_rate(const GridField& velocity, const ModelParams& params);

/// E + ε·∫u_t·u + (εω/2)‖∇u‖₂², from a cached report and ∫u_t·u.
inline double perturbed_energy(const EnergyReport& e, double cross, double epsilon, double omega) {
  return e.E + epsilon * cross + 0.5 * epsilon * omega * e.grad_sq;
}

/// Nodewise u|u|^{p−2}.
void apply_source(std::span<const double> u, double p, std::span<double> out);

}  // namespace dampwave
