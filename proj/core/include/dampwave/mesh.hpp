#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dampwave {

enum class DomainKind { interval, rectangle };

/// Uniform finite-difference grid on an interval or a rectangle with
/// homogeneous Dirichlet boundary. Only interior nodes carry unknowns.
class Domain {
 public:
  static Domain interval(double extent, int n);
  static Domain rectangle(double extent_x, double extent_y, int nx, int ny);

  DomainKind kind() const { return kind_; }
  int dim() const { return kind_ == DomainKind::interval ? 1 : 2; }
  int n(int axis) const { return n_[axis]; }
  double h(int axis) const { return h_[axis]; }
  double extent(int axis) const { return extent_[axis]; }

  /// Number of interior nodes.
  std::size_t size() const;
  /// Quadrature weight of one node (product of spacings).
  double cell_volume() const;
  /// Physical coordinate of interior node i along an axis (i is 0-based).
  double coordinate(int axis, int i) const { return (i + 1) * h_[axis]; }

  /// Stable textual identity, e.g. "interval:1:127" or "rectangle:1x2:31x63".
  std::string fingerprint() const;
  static Domain from_fingerprint(const std::string& text);

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  Domain(DomainKind kind, std::array<double, 2> extent, std::array<int, 2> n);

  DomainKind kind_;
  std::array<double, 2> extent_;
  std::array<int, 2> n_;
  std::array<double, 2> h_;
};

/// Real values on the interior nodes of a domain (x-fastest ordering in 2D).
class GridField {
 public:
  explicit GridField(Domain domain);
  GridField(Domain domain, std::vector<double> values);

  const Domain& domain() const { return domain_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool is_finite() const;
  bool is_zero() const;

  GridField& operator+=(const GridField& other);
  GridField& operator-=(const GridField& other);
  GridField& operator*=(double s);

 private:
  Domain domain_;
  std::vector<double> values_;
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(double s, GridField a);

/// Samples f at the interior nodes.
template <class F>
GridField sample(const Domain& domain, F&& f) {
  GridField out(domain);
  if (domain.dim() == 1) {
    for (int i = 0; i < domain.n(0); ++i) out[i] = f(domain.coordinate(0, i), 0.0);
  } else {
    const int nx = domain.n(0);
    for (int j = 0; j < domain.n(1); ++j)
      for (int i = 0; i < nx; ++i)
        out[static_cast<std::size_t>(j) * nx + i] =
            f(domain.coordinate(0, i), domain.coordinate(1, j));
  }
  return out;
}

// Raw kernels on spans; the GridField overloads below forward here.
void apply_stiffness(const Domain& domain, std::span<const double> u, std::span<double> out);
void apply_mean_curvature(const Domain& domain, std::span<const double> u, std::span<double> out);
double weighted_dot(const Domain& domain, std::span<const double> a, std::span<const double> b);

/// A·u, with A the 3-point (1D) / 5-point (2D) discretization of −Δ.
GridField laplacian_apply(const GridField& u);
/// Negative discrete div(∇u/√(1+|∇u|²)) with edge-centred slopes.
GridField mean_curvature_apply(const GridField& u);

/// ‖∇u‖₂², defined as the weighted stiffness form (∏h)·uᵀAu.
double grad_norm_sq(const GridField& u);
/// (∏h)·Σ|u_i|ᵖ; requires p > 2.
double lp_norm_p(const GridField& u, double p);
/// (∏h)·Σu_i².
double l2_norm_sq(const GridField& u);
/// (∏h)·Σa_i·b_i.
double inner(const GridField& a, const GridField& b);

/// Exact smallest eigenvalue of A on the domain (tensor product of
/// 1D values (4/h²)·sin²(πh/(2L))). Used as a reference value.
double smallest_stiffness_eigenvalue(const Domain& domain);
/// Sampled product of sin(πx/L) per axis: the first discrete eigenvector of A.
GridField first_eigenmode(const Domain& domain);

/// Solves (shift·I + scale·A)·x = rhs with shift ≥ 0, scale ≥ 0,
/// shift + scale > 0. Tridiagonal elimination in 1D, conjugate gradient in 2D.
class ShiftedStiffnessSolver {
 public:
  ShiftedStiffnessSolver(Domain domain, double shift, double scale, double rel_tol = 1e-11,
                         int max_iter = 10000);

  void solve(std::span<const double> rhs, std::span<double> x) const;
  GridField solve(const GridField& rhs) const;

  /// Conjugate-gradient iterations spent in the most recent 2D solve.
  int last_iterations() const { return last_iterations_; }

 private:
  void solve_tridiagonal(std::span<const double> rhs, std::span<double> x) const;
  void solve_cg(std::span<const double> rhs, std::span<double> x) const;

  Domain domain_;
  double shift_;
  double scale_;
  double rel_tol_;
  int max_iter_;
  // 1D: precomputed elimination factors of the constant tridiagonal matrix.
  std::vector<double> c_prime_;
  std::vector<double> inv_denom_;
  double off_diag_ = 0.0;
  mutable int last_iterations_ = 0;
};

}  // namespace dampwave
