#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "dampwave/functionals.hpp"
#include "dampwave/mesh.hpp"

namespace dampwave {

/// Result of the critical-exponent test 2 < p ≤ p̄(dim, ω).
struct ExponentCheck {
  bool ok = false;
  double p_bar = std::numeric_limits<double>::infinity();
};

/// p̄ = ∞ for dim ≤ 2; 2N/(N−2) for ω > 0 and (2N−2)/(N−2) for ω = 0 when N ≥ 3.
ExponentCheck validate_exponent(double p, int dim, double omega);

struct MinimizeOpts {
  int random_starts = 8;
  bool eigenmode_start = true;
  std::uint64_t seed = 12345;
  int max_iter = 100000;
  double tol = 1e-10;  // relative H¹-gradient norm
  int threads = 0;     // 0: hardware concurrency
};

struct CStarResult {
  double c_star = 0.0;
  GridField minimizer;  // ‖·‖ₚ = 1, largest-magnitude entry positive
  double residual = 0.0;
  int iterations = 0;
  int converged_starts = 0;
};

/// Best constant of ‖u‖ₚ ≤ C*‖∇u‖₂ on the grid, by multi-start minimization
/// of √‖∇u‖₂² / ‖u‖ₚ with H¹-preconditioned Barzilai–Borwein steps.
/// Throws NumericalError when no start converges.
CStarResult compute_c_star(const Domain& domain, double p, const MinimizeOpts& opts = {});

/// Smallest eigenvalue of the stiffness form by inverse power iteration.
double poincare_constant(const Domain& domain, double tol = 1e-14, int max_iter = 1000);

/// Variational constants of the potential well.
struct WellConstants {
  double c_star = 0.0;
  double d = 0.0;       // ((p−2)/(2p))·C*^{−2p/(p−2)}
  double beta = 0.0;    // √(2dp/(p−2))
  double lambda1 = 0.0; // discrete Poincaré constant
  double p = 0.0;
  std::string domain_fingerprint;  // empty when not tied to a grid
  std::optional<GridField> ground_state;

  /// Derives d and β from C*.
  static WellConstants from_c_star(double c_star, double p, double lambda1);

  /// C*ᵖ·((2p/(p−2))·E0)^{(p−2)/2}; taken as 0 for E0 ≤ 0.
  double admissibility(double E0) const;
  /// admissibility(E0) < 1, equivalent to E0 < d.
  bool admissible(double E0) const { return admissibility(E0) < 1.0; }
};

WellConstants well_constants(const Domain& domain, double p, const MinimizeOpts& opts = {});

/// λ* = (‖∇u‖₂²/‖u‖ₚᵖ)^{1/(p−2)}, the scaling that puts λ*u on the Nehari manifold.
double nehari_scale(const GridField& u, double p);

enum class NehariSet { N_plus, N_zero, N_minus };
std::string to_string(NehariSet set);

struct Classification {
  NehariSet set = NehariSet::N_plus;
  bool in_W = false;
  bool in_U = false;
  bool high_energy = false;
  bool admissible = false;  // C*ᵖ(2p/(p−2)·E)^{(p−2)/2} < 1
  double admissibility = 0.0;
  double I = 0.0;
  double J = 0.0;
  double E = 0.0;
  double tol_I = 0.0;
};

/// Dead band for sign decisions on I: 1e−9·max(‖∇u‖₂², ‖u‖ₚᵖ).
double nehari_tolerance(double grad_sq, double lp_p);

Classification classify(const SimState& state, const ModelParams& params, const WellConstants& wc);

struct InitialTarget {
  enum class Kind { stable, unstable };
  Kind kind = Kind::stable;
  double fraction = 0.5;  // target level as a multiple of d

  static InitialTarget stable(double fraction) { return {Kind::stable, fraction}; }
  static InitialTarget unstable(double fraction) { return {Kind::unstable, fraction}; }
};

enum class InitialShape { ground_state, eigenmode };

struct InitialData {
  GridField u0;
  GridField u1;
  double scale = 0.0;  // u0 = scale·shape
};

/// Builds u0 = s·φ with J(u0) = fraction·d: s < λ*(φ) for stable targets
/// (u0 ∈ 𝒩⁺), s > λ*(φ) for unstable ones (u0 ∈ 𝒩⁻). u1 ≡ 0.
InitialData prepare_initial_data(const Domain& domain, const ModelParams& params,
                                 const WellConstants& wc, InitialTarget target,
                                 InitialShape shape = InitialShape::ground_state);
InitialData prepare_initial_data(const GridField& shape, const ModelParams& params,
                                 const WellConstants& wc, InitialTarget target);

}  // namespace dampwave
