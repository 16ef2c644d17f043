#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "dampwave/functionals.hpp"
#include "dampwave/solver.hpp"
#include "dampwave/well.hpp"

namespace dampwave {

/// L = E + ε∫u_t·u + (εω/2)‖∇u‖₂². With ω = 0 the last term vanishes.
double lyapunov_L(const SimState& state, const ModelParams& params, double epsilon);

/// Quantities the constant chain is built from.
struct ChainContext {
  double K = 0.0;        // C*ᵖ((2p/(p−2))E0)^{(p−2)/2}, must be < 1
  double c0 = 1.0;       // max(1, p/((p−2)λ₁)), bounds |∫u_t·u| ≤ c0·E
  double l2_embedding_sq = 1.0;  // max(C*², 1/λ₁), bounds ‖u‖₂² ≤ · ‖∇u‖₂²
  double lambda1 = 0.0;
  double mu = 0.0;
  double omega = 0.0;
  double p = 0.0;
};

/// The constant chain δ → η → M → ε → (β₁, β₂) → ξ of the exponential-decay
/// argument, plus what certification measured on a trajectory.
struct DecayCertificate {
  double delta = 0.0;
  double eta = 0.0;
  double M = 0.0;
  double epsilon = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double xi = 0.0;
  double xi_fitted = std::numeric_limits<double>::quiet_NaN();
  double fit_r2 = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> violated_at;
  ChainContext context;

  /// Completes β₁, β₂, ξ from the chosen δ, η, M, ε and checks every
  /// invariant; throws ConfigError if one fails (e.g. β₁ ≤ 0).
  static DecayCertificate build(const ChainContext& context, double delta, double eta, double M,
                                double epsilon);
  void validate() const;
};

ChainContext chain_context(double E0, const ModelParams& params, const WellConstants& wc);

/// Deterministic choice of the chain: δ = (1−K)/(2μ·C₂²), η = M = (1−K)/2,
/// ε at half its feasibility bound. Requires E0 < d.
DecayCertificate select_constants(double E0, const ModelParams& params, const WellConstants& wc);

struct LogLinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;
};

/// Least squares of log y on t; y must be positive.
LogLinearFit fit_log_linear(std::span<const double> t, std::span<const double> y);

/// Checks L(t_{k+1}) ≤ L(t_k)·e^{−ξΔt}·(1 + tol_cert) on consecutive samples and
/// fits the observed rate on log E over the window E ≥ 1e−12·E(0).
DecayCertificate certify_decay(const TimeSeries& series, DecayCertificate cert, double tol_cert);

struct EquivalenceReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::optional<double> first_violation;
  double min_ratio = std::numeric_limits<double>::infinity();   // min L/E
  double max_ratio = -std::numeric_limits<double>::infinity();  // max L/E
  bool ok() const { return violations == 0; }
};

/// β₁·E ≤ L ≤ β₂·E at every sample, to a relative tolerance.
EquivalenceReport equivalence_check(const TimeSeries& series, const DecayCertificate& cert,
                                    double rel_tol = 1e-12);

}  // namespace dampwave
