#include "dampwave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "dampwave/error.hpp"

namespace dampwave {

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require_same(const Domain& a, const Domain& b) {
  if (!(a == b)) throw ConfigError("grid fields live on different domains");
}

}  // namespace

Domain::Domain(DomainKind kind, std::array<double, 2> extent, std::array<int, 2> n)
    : kind_(kind), extent_(extent), n_(n), h_{0.0, 0.0} {
  const int axes = kind == DomainKind::interval ? 1 : 2;
  for (int a = 0; a < axes; ++a) {
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
      throw ConfigError("domain extent must be positive and finite");
    if (n[a] < 2) throw ConfigError("domain needs at least 2 interior nodes per axis");
    h_[a] = extent[a] / (n[a] + 1);
  }
}

Domain Domain::interval(double extent, int n) {
  return Domain(DomainKind::interval, {extent, 0.0}, {n, 1});
}

Domain Domain::rectangle(double extent_x, double extent_y, int nx, int ny) {
  return Domain(DomainKind::rectangle, {extent_x, extent_y}, {nx, ny});
}

std::size_t Domain::size() const {
  return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]);
}

double Domain::cell_volume() const { return dim() == 1 ? h_[0] : h_[0] * h_[1]; }

std::string Domain::fingerprint() const {
  if (kind_ == DomainKind::interval)
    return "interval:" + format_double(extent_[0]) + ":" + std::to_string(n_[0]);
  return "rectangle:" + format_double(extent_[0]) + "x" + format_double(extent_[1]) + ":" +
         std::to_string(n_[0]) + "x" + std::to_string(n_[1]);
}

Domain Domain::from_fingerprint(const std::string& text) {
  const auto bad = [&] { return ConfigError("malformed domain fingerprint '" + text + "'"); };
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) throw bad();
  const std::string kind = text.substr(0, c1);
  const std::string ext = text.substr(c1 + 1, c2 - c1 - 1);
  const std::string nodes = text.substr(c2 + 1);
  try {
    if (kind == "interval") {
      std::size_t used = 0;
      const double e = std::stod(ext, &used);
      if (used != ext.size()) throw bad();
      const int n = std::stoi(nodes, &used);
      if (used != nodes.size()) throw bad();
      return interval(e, n);
    }
    if (kind == "rectangle") {
      const auto xe = ext.find('x');
      const auto xn = nodes.find('x');
      if (xe == std::string::npos || xn == std::string::npos) throw bad();
      return rectangle(std::stod(ext.substr(0, xe)), std::stod(ext.substr(xe + 1)),
                       std::stoi(nodes.substr(0, xn)), std::stoi(nodes.substr(xn + 1)));
    }
  } catch (const std::logic_error&) {
    throw bad();
  }
  throw bad();
}

GridField::GridField(Domain domain) : domain_(domain), values_(domain.size(), 0.0) {}

GridField::GridField(Domain domain, std::vector<double> values)
    : domain_(domain), values_(std::move(values)) {
  if (values_.size() != domain_.size())
    throw ConfigError("grid field length does not match the domain node count");
}

bool GridField::is_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

bool GridField::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

GridField& GridField::operator+=(const GridField& other) {
  require_same(domain_, other.domain_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

GridField& GridField::operator-=(const GridField& other) {
  require_same(domain_, other.domain_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

GridField& GridField::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(double s, GridField a) { return a *= s; }

void apply_stiffness(const Domain& domain, std::span<const double> u, std::span<double> out) {
  const int nx = domain.n(0);
  const double ihx2 = 1.0 / (domain.h(0) * domain.h(0));
  if (domain.dim() == 1) {
    for (int i = 0; i < nx; ++i) {
      const double left = i > 0 ? u[i - 1] : 0.0;
      const double right = i + 1 < nx ? u[i + 1] : 0.0;
      out[i] = (2.0 * u[i] - left - right) * ihx2;
    }
    return;
  }
  const int ny = domain.n(1);
  const double ihy2 = 1.0 / (domain.h(1) * domain.h(1));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      const double west = i > 0 ? u[k - 1] : 0.0;
      const double east = i + 1 < nx ? u[k + 1] : 0.0;
      const double south = j > 0 ? u[k - nx] : 0.0;
      const double north = j + 1 < ny ? u[k + nx] : 0.0;
      out[k] = (2.0 * u[k] - west - east) * ihx2 + (2.0 * u[k] - south - north) * ihy2;
    }
  }
}

void apply_mean_curvature(const Domain& domain, std::span<const double> u,
                          std::span<double> out) {
  const auto flux = [](double slope) { return slope / std::sqrt(1.0 + slope * slope); };
  const int nx = domain.n(0);
  const double hx = domain.h(0);
  if (domain.dim() == 1) {
    double west_flux = flux(u[0] / hx);
    for (int i = 0; i < nx; ++i) {
      const double right = i + 1 < nx ? u[i + 1] : 0.0;
      const double east_flux = flux((right - u[i]) / hx);
      out[i] = -(east_flux - west_flux) / hx;
      west_flux = east_flux;
    }
    return;
  }
  const int ny = domain.n(1);
  const double hy = domain.h(1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      const double west = i > 0 ? u[k - 1] : 0.0;
      const double east = i + 1 < nx ? u[k + 1] : 0.0;
      const double south = j > 0 ? u[k - nx] : 0.0;
      const double north = j + 1 < ny ? u[k + nx] : 0.0;
      const double fx = flux((east - u[k]) / hx) - flux((u[k] - west) / hx);
      const double fy = flux((north - u[k]) / hy) - flux((u[k] - south) / hy);
      out[k] = -fx / hx - fy / hy;
    }
  }
}

double weighted_dot(const Domain& domain, std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return domain.cell_volume() * sum;
}

GridField laplacian_apply(const GridField& u) {
  GridField out(u.domain());
  apply_stiffness(u.domain(), u.values(), out.values());
  return out;
}

GridField mean_curvature_apply(const GridField& u) {
  GridField out(u.domain());
  apply_mean_curvature(u.domain(), u.values(), out.values());
  return out;
}

double grad_norm_sq(const GridField& u) {
  // Edge form of uᵀAu: the sum of squared difference quotients over all
  // edges, boundary edges included. Always non-negative, no cancellation.
  const Domain& d = u.domain();
  const int nx = d.n(0);
  const auto v = u.values();
  double sum = 0.0;
  if (d.dim() == 1) {
    double prev = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double diff = v[i] - prev;
      sum += diff * diff;
      prev = v[i];
    }
    sum += prev * prev;
    return d.cell_volume() * sum / (d.h(0) * d.h(0));
  }
  const int ny = d.n(1);
  double sx = 0.0;
  double sy = 0.0;
  for (int j = 0; j < ny; ++j) {
    double prev = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double x = v[static_cast<std::size_t>(j) * nx + i];
      sx += (x - prev) * (x - prev);
      prev = x;
    }
    sx += prev * prev;
  }
  for (int i = 0; i < nx; ++i) {
    double prev = 0.0;
    for (int j = 0; j < ny; ++j) {
      const double x = v[static_cast<std::size_t>(j) * nx + i];
      sy += (x - prev) * (x - prev);
      prev = x;
    }
    sy += prev * prev;
  }
  sum = sx / (d.h(0) * d.h(0)) + sy / (d.h(1) * d.h(1));
  return d.cell_volume() * sum;
}

double lp_norm_p(const GridField& u, double p) {
  if (!(p > 2.0)) throw ConfigError("lp_norm_p requires p > 2");
  double sum = 0.0;
  for (double x : u.values()) sum += std::pow(std::abs(x), p);
  return u.domain().cell_volume() * sum;
}

double l2_norm_sq(const GridField& u) { return weighted_dot(u.domain(), u.values(), u.values()); }

double inner(const GridField& a, const GridField& b) {
  require_same(a.domain(), b.domain());
  return weighted_dot(a.domain(), a.values(), b.values());
}

double smallest_stiffness_eigenvalue(const Domain& domain) {
  double lambda = 0.0;
  for (int a = 0; a < domain.dim(); ++a) {
    const double s = std::sin(std::numbers::pi * domain.h(a) / (2.0 * domain.extent(a)));
    lambda += 4.0 * s * s / (domain.h(a) * domain.h(a));
  }
  return lambda;
}

GridField first_eigenmode(const Domain& domain) {
  const double lx = domain.extent(0);
  const double ly = domain.extent(1);
  const bool two_d = domain.dim() == 2;
  return sample(domain, [&](double x, double y) {
    const double sx = std::sin(std::numbers::pi * x / lx);
    return two_d ? sx * std::sin(std::numbers::pi * y / ly) : sx;
  });
}

ShiftedStiffnessSolver::ShiftedStiffnessSolver(Domain domain, double shift, double scale,
                                               double rel_tol, int max_iter)
    : domain_(domain), shift_(shift), scale_(scale), rel_tol_(rel_tol), max_iter_(max_iter) {
  if (shift < 0.0 || scale < 0.0 || !(shift + scale > 0.0))
    throw ConfigError("shifted stiffness system must be symmetric positive definite");
  if (domain_.dim() == 1) {
    const int n = domain_.n(0);
    const double ih2 = 1.0 / (domain_.h(0) * domain_.h(0));
    const double diag = shift_ + 2.0 * scale_ * ih2;
    off_diag_ = -scale_ * ih2;
    c_prime_.resize(n);
    inv_denom_.resize(n);
    double c_prev = 0.0;
    for (int i = 0; i < n; ++i) {
      const double denom = diag - off_diag_ * c_prev;
      inv_denom_[i] = 1.0 / denom;
      c_prime_[i] = off_diag_ * inv_denom_[i];
      c_prev = c_prime_[i];
    }
  }
}

void ShiftedStiffnessSolver::solve(std::span<const double> rhs, std::span<double> x) const {
  if (rhs.size() != domain_.size() || x.size() != domain_.size())
    throw ConfigError("linear solve: vector length does not match the domain");
  if (domain_.dim() == 1)
    solve_tridiagonal(rhs, x);
  else
    solve_cg(rhs, x);
}

GridField ShiftedStiffnessSolver::solve(const GridField& rhs) const {
  if (!(rhs.domain() == domain_)) throw ConfigError("linear solve: domain mismatch");
  GridField x(domain_);
  solve(rhs.values(), x.values());
  return x;
}

void ShiftedStiffnessSolver::solve_tridiagonal(std::span<const double> rhs,
                                               std::span<double> x) const {
  const std::size_t n = rhs.size();
  double d_prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (rhs[i] - off_diag_ * d_prev) * inv_denom_[i];
    d_prev = x[i];
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c_prime_[i] * x[i + 1];
}

void ShiftedStiffnessSolver::solve_cg(std::span<const double> rhs, std::span<double> x) const {
  // The diagonal is constant, so Jacobi preconditioning would be a no-op.
  const std::size_t n = rhs.size();
  std::vector<double> r(rhs.begin(), rhs.end());
  std::vector<double> p(n), ap(n);
  std::fill(x.begin(), x.end(), 0.0);

  const auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };
  const double rhs_norm = std::sqrt(dot(r, r));
  last_iterations_ = 0;
  if (rhs_norm == 0.0) return;

  p = r;
  double rr = dot(r, r);
  for (int it = 0; it < max_iter_; ++it) {
    apply_stiffness(domain_, p, ap);
    for (std::size_t i = 0; i < n; ++i) ap[i] = shift_ * p[i] + scale_ * ap[i];
    const double alpha = rr / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    last_iterations_ = it + 1;
    if (std::sqrt(rr_new) <= rel_tol_ * rhs_norm) return;
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  throw NumericalError("conjugate gradient did not reach the requested tolerance");
}

}  // namespace dampwave
