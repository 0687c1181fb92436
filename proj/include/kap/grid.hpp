#ifndef KAP_GRID_HPP
#define KAP_GRID_HPP

// Phase-space discretization: a uniform midpoint velocity lattice in two
// velocity dimensions, a uniform 1D spatial mesh, moments and Maxwellians.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kap/error.hpp"

namespace kap {

/// Uniform n x n midpoint lattice on [-v_max, v_max]^2 with midpoint-rule weights.
class VelocityGrid {
 public:
  VelocityGrid(int n, double v_max) : n_(n), v_max_(v_max), dv_(2.0 * v_max / n) {
    if (n < 8 || n % 2 != 0)
      throw Error(ErrorKind::GridMismatch, "velocity points per dimension must be even and >= 8");
    if (!(v_max > 0.0)) throw Error(ErrorKind::GridMismatch, "v_max must be positive");
    nodes_.resize(n);
    // Mirror pairs are exact negatives so reflection symmetry holds bitwise.
    for (int j = 0; j < n / 2; ++j) {
      nodes_[j] = -v_max + (j + 0.5) * dv_;
      nodes_[n - 1 - j] = -nodes_[j];
    }
  }

  int n() const { return n_; }
  int size() const { return n_ * n_; }
  double v_max() const { return v_max_; }
  double dv() const { return dv_; }
  double weight() const { return dv_ * dv_; }
  double node(int j) const { return nodes_[j]; }
  const std::vector<double>& nodes() const { return nodes_; }
  /// Index of the node mirrored through v = 0.
  int mirror(int j) const { return n_ - 1 - j; }

  friend bool operator==(const VelocityGrid& a, const VelocityGrid& b) {
    return a.n_ == b.n_ && a.v_max_ == b.v_max_;
  }

 private:
  int n_;
  double v_max_;
  double dv_;
  std::vector<double> nodes_;
};

enum class Boundary { Periodic, SpecularReflection };

inline std::string to_string(Boundary bc) {
  return bc == Boundary::Periodic ? "periodic" : "specular";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "specular" || s == "specular_reflection") return Boundary::SpecularReflection;
  throw Error(ErrorKind::ConfigError, "unknown boundary condition '" + s + "'");
}

class SpatialMesh {
 public:
  SpatialMesh(int n_x, double x_left, double x_right, Boundary bc)
      : n_x_(n_x), x_left_(x_left), x_right_(x_right), bc_(bc) {
    if (n_x <= 0 || !(x_right > x_left))
      throw Error(ErrorKind::GridMismatch, "spatial mesh needs n_x > 0 and x_right > x_left");
  }

  int n_x() const { return n_x_; }
  double x_left() const { return x_left_; }
  double x_right() const { return x_right_; }
  double dx() const { return (x_right_ - x_left_) / n_x_; }
  double center(int i) const { return x_left_ + (i + 0.5) * dx(); }
  Boundary bc() const { return bc_; }

  friend bool operator==(const SpatialMesh& a, const SpatialMesh& b) {
    return a.n_x_ == b.n_x_ && a.x_left_ == b.x_left_ && a.x_right_ == b.x_right_ &&
           a.bc_ == b.bc_;
  }

 private:
  int n_x_;
  double x_left_;
  double x_right_;
  Boundary bc_;
};

/// Phase-space density f(x_i, v_j, v_k); velocity index k runs fastest.
class Distribution {
 public:
  Distribution() = default;
  Distribution(int n_x, int n_v, double value = 0.0)
      : n_x_(n_x), n_v_(n_v), values_(static_cast<std::size_t>(n_x) * n_v * n_v, value) {}

  int n_x() const { return n_x_; }
  int n_v() const { return n_v_; }
  std::size_t cell_size() const { return static_cast<std::size_t>(n_v_) * n_v_; }

  double& operator()(int i, int j, int k) { return values_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return values_[index(i, j, k)]; }

  std::span<double> cell(int i) { return {values_.data() + i * cell_size(), cell_size()}; }
  std::span<const double> cell(int i) const {
    return {values_.data() + i * cell_size(), cell_size()};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Distribution& o) const { return n_x_ == o.n_x_ && n_v_ == o.n_v_; }

  bool all_finite() const {
    for (double x : values_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_v_ + j) * n_v_ + k;
  }

  int n_x_ = 0;
  int n_v_ = 0;
  std::vector<double> values_;
};

/// Conserved moments (rho, rho u, E) of one cell, with d_v = 2 so E = rho|u|^2/2 + rho T.
struct Conserved {
  double rho = 0.0;
  double mx = 0.0;
  double my = 0.0;
  double energy = 0.0;

  double ux() const { return mx / rho; }
  double uy() const { return my / rho; }
  double temperature() const { return (energy - 0.5 * (mx * mx + my * my) / rho) / rho; }
  double pressure() const { return rho * temperature(); }

  static Conserved from_primitive(double rho, double ux, double uy, double T) {
    return {rho, rho * ux, rho * uy, 0.5 * rho * (ux * ux + uy * uy) + rho * T};
  }

  Conserved& operator+=(const Conserved& o) {
    rho += o.rho;
    mx += o.mx;
    my += o.my;
    energy += o.energy;
    return *this;
  }
  friend Conserved operator-(Conserved a, const Conserved& b) {
    return {a.rho - b.rho, a.mx - b.mx, a.my - b.my, a.energy - b.energy};
  }
  friend Conserved operator*(double s, const Conserved& a) {
    return {s * a.rho, s * a.mx, s * a.my, s * a.energy};
  }
};

using MacroState = std::vector<Conserved>;

/// Raw quadrature sums (no positivity check) of one cell, left-to-right order.
inline Conserved moment_sums(std::span<const double> f, const VelocityGrid& g) {
  const int n = g.n();
  Conserved s;
  for (int j = 0; j < n; ++j) {
    const double vx = g.node(j);
    double rho_j = 0.0, my_j = 0.0, e_j = 0.0;
    for (int k = 0; k < n; ++k) {
      const double vy = g.node(k);
      const double fv = f[static_cast<std::size_t>(j) * n + k];
      rho_j += fv;
      my_j += vy * fv;
      e_j += 0.5 * (vx * vx + vy * vy) * fv;
    }
    s.rho += rho_j;
    s.mx += vx * rho_j;
    s.my += my_j;
    s.energy += e_j;
  }
  return g.weight() * s;
}

inline Conserved cell_moments(std::span<const double> f, const VelocityGrid& g, int cell = 0) {
  Conserved u = moment_sums(f, g);
  if (!(u.rho > 0.0)) {
    std::ostringstream os;
    os << "density " << u.rho << " in cell " << cell;
    throw Error(ErrorKind::NonPositiveDensity, os.str());
  }
  return u;
}

inline MacroState moments(const Distribution& f, const VelocityGrid& g) {
  if (f.n_v() != g.n()) throw Error(ErrorKind::GridMismatch, "distribution/velocity grid size");
  MacroState out(f.n_x());
  for (int i = 0; i < f.n_x(); ++i) out[i] = cell_moments(f.cell(i), g, i);
  return out;
}

inline void check_moments(const Conserved& u) {
  if (!(u.rho > 0.0)) throw Error(ErrorKind::InvalidMoments, "non-positive density");
  const double T = u.temperature();
  if (!(T > 0.0) || !std::isfinite(T)) {
    std::ostringstream os;
    os << "non-positive temperature " << T;
    throw Error(ErrorKind::InvalidMoments, os.str());
  }
}

/// Samples rho/(2 pi T) exp(-|v-u|^2/(2T)) at the lattice nodes of one cell.
inline void maxwellian_cell(const Conserved& u, const VelocityGrid& g, std::span<double> out) {
  check_moments(u);
  const int n = g.n();
  const double T = u.temperature();
  const double ux = u.ux(), uy = u.uy();
  const double scale = u.rho / (2.0 * std::numbers::pi * T);
  const double inv2T = 1.0 / (2.0 * T);
  for (int j = 0; j < n; ++j) {
    const double dx = g.node(j) - ux;
    for (int k = 0; k < n; ++k) {
      const double dy = g.node(k) - uy;
      out[static_cast<std::size_t>(j) * n + k] = scale * std::exp(-(dx * dx + dy * dy) * inv2T);
    }
  }
}

inline Distribution maxwellian(const MacroState& U, const VelocityGrid& g) {
  Distribution f(static_cast<int>(U.size()), g.n());
  for (std::size_t i = 0; i < U.size(); ++i) maxwellian_cell(U[i], g, f.cell(static_cast<int>(i)));
  return f;
}

/// Maxwellian whose lattice moments equal U to round-off: Newton on the
/// parameters (rho, u, T) of the sampled Gaussian. The sampled formula alone
/// carries an O(quadrature) moment error that would leak into every step.
inline void discrete_maxwellian_cell(const Conserved& u, const VelocityGrid& g, std::span<double> out) {
  check_moments(u);
  const int n = g.n();
  Eigen::Vector4d p(u.rho, u.ux(), u.uy(), u.temperature());
  const Eigen::Vector4d target(u.rho, u.mx, u.my, u.energy);
  const double scale = std::abs(u.rho) + std::abs(u.mx) + std::abs(u.my) + std::abs(u.energy);
  for (int iter = 0; iter < 30; ++iter) {
    maxwellian_cell(Conserved::from_primitive(p[0], p[1], p[2], p[3]), g, out);
    Eigen::Matrix4d jac = Eigen::Matrix4d::Zero();
    Eigen::Vector4d sums = Eigen::Vector4d::Zero();
    for (int j = 0; j < n; ++j) {
      const double vx = g.node(j), cx = vx - p[1];
      for (int k = 0; k < n; ++k) {
        const double vy = g.node(k), cy = vy - p[2];
        const double m = out[static_cast<std::size_t>(j) * n + k];
        const Eigen::Vector4d phi(1.0, vx, vy, 0.5 * (vx * vx + vy * vy));
        const Eigen::Vector4d dm(m / p[0], m * cx / p[3], m * cy / p[3],
                                 m * ((cx * cx + cy * cy) / (2.0 * p[3] * p[3]) - 1.0 / p[3]));
        sums += m * phi;
        jac += phi * dm.transpose();
      }
    }
    const Eigen::Vector4d r = g.weight() * sums - target;
    if (r.lpNorm<1>() <= 1e-15 * scale) return;
    p -= (g.weight() * jac).partialPivLu().solve(r);
    if (!(p[0] > 0.0) || !(p[3] > 0.0) || !p.allFinite())
      throw Error(ErrorKind::InvalidMoments, "moments not representable by a lattice Maxwellian");
  }
  // Newton stalls at round-off; keep the last iterate.
  maxwellian_cell(Conserved::from_primitive(p[0], p[1], p[2], p[3]), g, out);
}

inline Distribution discrete_maxwellian(const MacroState& U, const VelocityGrid& g) {
  Distribution f(static_cast<int>(U.size()), g.n());
  for (std::size_t i = 0; i < U.size(); ++i)
    discrete_maxwellian_cell(U[i], g, f.cell(static_cast<int>(i)));
  return f;
}

}  // namespace kap

#endif  // KAP_GRID_HPP
