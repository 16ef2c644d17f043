#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dampwave/error.hpp"
#include "dampwave/functionals.hpp"
#include "dampwave/mesh.hpp"

namespace dampwave {

struct StepConfig {
  double dt = 1e-3;
  double picard_tol = 1e-10;
  int picard_max = 50;
  double linear_solver_tol = 1e-11;

  /// dt > 0 (dt ≠ 0 in diagnostic mode), positive tolerances.
  void validate(const ModelParams& params) const;
};

/// Picard iteration failed to converge or produced non-finite values.
class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct StepInfo {
  int picard_iterations = 0;
  double picard_increment = 0.0;
  double dissipation_mid = 0.0;  // −ω‖∇v^{n+½}‖₂² − μ‖v^{n+½}‖₂²
};

/// Implicit-midpoint integrator for the first-order system u' = v,
/// v' = −A(u) − ωAv − μv + f(u). Linear terms are implicit; the source
/// (and the nonlinear part of the mean-curvature operator) is resolved by
/// Picard iteration on the midpoint displacement.
class Stepper {
 public:
  Stepper(const Domain& domain, const ModelParams& params, const StepConfig& cfg);

  /// Advances state by one step in place; throws StepFailure and leaves the
  /// state untouched on failure.
  StepInfo advance(SimState& state);

  const StepConfig& config() const { return cfg_; }

 private:
  Domain domain_;
  ModelParams params_;
  StepConfig cfg_;
  ShiftedStiffnessSolver solver_;
  std::vector<double> rhs_base_, rhs_, vm_, um_, um_next_, work_, au_;
};

SimState step(const SimState& state, const ModelParams& params, const StepConfig& cfg);

/// One recorded sample; column order of the CSV export.
struct Sample {
  double t = 0.0;
  double E = 0.0;
  double I = 0.0;
  double J = 0.0;
  double L = 0.0;
  double kinetic = 0.0;
  double grad_sq = 0.0;
  double lp_p = 0.0;
  double l2_v = 0.0;
  double grad_v_sq = 0.0;
  double cross = 0.0;  // ∫u_t·u, kept for recomputing L; not exported

  /// ‖∇u‖₂ + ‖u_t‖₂
  double blowup_norm() const;
};

struct TimeSeries {
  double epsilon = 0.0;  // ε used for the L column
  double omega = 0.0;
  std::vector<Sample> samples;

  static constexpr const char* csv_header = "t,E,I,J,L,kinetic,grad_sq,lp_p,l2_v,grad_v_sq";
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
  static TimeSeries read_csv(std::istream& in);
};

Sample make_sample(const SimState& state, const ModelParams& params, double epsilon);

struct MonitorSet {
  bool nehari = false;         // I(u(t)) > −tol_I
  bool gradient_bound = false; // ‖∇u‖₂² ≤ (2p/(p−2))·E(0)·(1 + 1e−6)
  bool energy_decay = false;   // E(t_{n+1}) ≤ E(t_n) + energy_tol
  bool uniform_bound = false;  // ‖∇u‖₂² + ‖u_t‖₂² ≤ (2p/(p−2) + 2)·E(0)·(1 + 1e−6)
  /// Allowed per-step energy increase, as a multiple of |dt|³·max(E(0), 1).
  double energy_tol_factor = 1e3;

  static MonitorSet stable_run() { return {true, true, true, true}; }
  static MonitorSet none() { return {}; }
  bool any() const { return nehari || gradient_bound || energy_decay || uniform_bound; }
};

struct BlowupThresholds {
  double norm_threshold = 1e6;
  int growth_window = 10;
  int fit_samples = 20;
};

/// Blow-up test on a series: fires when ‖∇u‖₂ + ‖u_t‖₂ crosses the threshold,
/// or when the run ended in a step failure while the norm grew monotonically
/// over the last growth_window samples. Returns the T_max estimate: the pole
/// of C·(T − t)^{−α} fitted to the last samples before firing.
std::optional<double> detect_blowup(const TimeSeries& series, const BlowupThresholds& thresholds,
                                    bool step_failed = false);

/// Least-squares fit of C·(T − t)^{−α} to (t_k, y_k); returns T (≥ last t).
double fit_pole(std::span<const double> t, std::span<const double> y);

struct RunOptions {
  double horizon = 1.0;
  MonitorSet monitors;
  BlowupThresholds blowup;
  int sample_stride = 0;  // 0: every step for ≤ 255 nodes, else every 10th
  double lyapunov_epsilon = 0.0;
};

struct RunOutcome {
  enum class Kind { completed, blew_up, monitor_violation };
  Kind kind = Kind::completed;
  double time = 0.0;                     // end of the run
  std::optional<double> t_max_estimate;  // blew_up only
  std::string details;                   // monitor_violation only
};

std::string to_string(RunOutcome::Kind kind);

struct RunResult {
  TimeSeries series;
  RunOutcome outcome;
  SimState final_state;
  long steps = 0;
  double energy_drift = 0.0;       // Σ |ΔE − dt·D(v^{n+½})|
  double max_step_residual = 0.0;  // max  |ΔE − dt·D(v^{n+½})|
  long heuristic_energy_increases = 0;  // mean-curvature mode only
};

/// Integrates to the horizon. Blow-up and monitor violations are reported
/// outcomes; a step failure without norm growth throws NumericalError.
RunResult run(const SimState& initial, const ModelParams& params, const StepConfig& cfg,
              const RunOptions& options);

}  // namespace dampwave
