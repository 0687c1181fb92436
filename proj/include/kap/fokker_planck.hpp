#ifndef KAP_FOKKER_PLANCK_HPP
#define KAP_FOKKER_PLANCK_HPP

// Rescaled porous-medium equation df/dt = div(v f + grad f^m) on a 2D velocity
// box with no-flux walls. The stiff part div(v f + m grad(M^{m-1} f)), with M
// the Barenblatt profile of the initial mass, is implicit; the remainder
// lap(f^m - m M^{m-1} f) is explicit. The implicit matrix does not depend on
// time and is factored once.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "kap/error.hpp"
#include "kap/grid.hpp"

namespace kap {

/// C with int (C - (m-1)/(2m) |v|^2)_+^{1/(m-1)} dv = mass in two dimensions.
inline double barenblatt_C(double mass, double m) {
  if (!(mass > 0.0) || !(m > 1.0)) throw Error(ErrorKind::ConfigError, "barenblatt_C needs mass > 0, m > 1");
  const double a = (m - 1.0) / (2.0 * m), p = 1.0 / (m - 1.0);
  // mass = (pi / a) C^{p+1} / (p + 1)
  return std::pow(mass * a * (p + 1.0) / std::numbers::pi, 1.0 / (p + 1.0));
}

inline double barenblatt(double v2, double C, double m) {
  const double base = C - (m - 1.0) / (2.0 * m) * v2;
  return base > 0.0 ? std::pow(base, 1.0 / (m - 1.0)) : 0.0;
}

struct PorousState {
  std::vector<double> f;  // node (j, k) at j * n + k
  double t = 0.0;
};

inline double porous_mass(const std::vector<double>& f, const VelocityGrid& g) {
  double s = 0.0;
  for (double x : f) s += x;
  return g.weight() * s;
}

inline std::vector<double> barenblatt_profile(const VelocityGrid& g, double C, double m) {
  const int n = g.n();
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      out[static_cast<std::size_t>(j) * n + k] =
          barenblatt(g.node(j) * g.node(j) + g.node(k) * g.node(k), C, m);
  return out;
}

/// Indicator balls of radius r0 and height `height` centered at l e^{i 2 pi k/count},
/// l in {1, 2}, sampled at the nodes.
inline std::vector<double> ring_data(const VelocityGrid& g, int count = 12, double r0 = 0.25,
                                     double height = 0.1) {
  const int n = g.n();
  std::vector<double> f(static_cast<std::size_t>(n) * n, 0.0);
  for (int l = 1; l <= 2; ++l)
    for (int c = 0; c < count; ++c) {
      const double th = 2.0 * std::numbers::pi * c / count;
      const double cx = l * std::cos(th), cy = l * std::sin(th);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double dx = g.node(j) - cx, dy = g.node(k) - cy;
          if (dx * dx + dy * dy < r0 * r0) f[static_cast<std::size_t>(j) * n + k] += height;
        }
    }
  return f;
}

class PorousSolver {
 public:
  /// `mass` fixes the Barenblatt profile used in the implicit operator.
  PorousSolver(const VelocityGrid& g, double m, double mass, double dt)
      : grid_(g), m_(m), dt_(dt), C_(barenblatt_C(mass, m)) {
    if (!(dt > 0.0)) throw Error(ErrorKind::ConfigError, "time step must be positive");
    const int n = g.n();
    mpow_.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double v2 = g.node(j) * g.node(j) + g.node(k) * g.node(k);
        mpow_[idx(j, k)] = std::max(C_ - (m - 1.0) / (2.0 * m) * v2, 0.0);  // M^{m-1}
      }
    assemble();
  }

  const VelocityGrid& grid() const { return grid_; }
  double m() const { return m_; }
  double C() const { return C_; }
  double dt() const { return dt_; }

  /// One step of (I - dt L) f' = f + dt N(f).
  PorousState step(const PorousState& s) const {
    const std::size_t size = s.f.size();
    if (size != mpow_.size()) throw Error(ErrorKind::GridMismatch, "porous state size");
    const std::vector<double> nf = explicit_part(s.f);
    Eigen::VectorXd rhs(size);
    for (std::size_t i = 0; i < size; ++i) rhs[i] = s.f[i] + dt_ * nf[i];
    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !x.allFinite())
      throw Error(ErrorKind::LinearSolveFailure, "sparse solve failed");
    const double residual = (matrix_ * x - rhs).norm();
    if (residual > 1e-10 * std::max(1.0, rhs.norm())) {
      std::ostringstream os;
      os << "linear residual " << residual;
      throw Error(ErrorKind::LinearSolveFailure, os.str());
    }
    PorousState out{std::vector<double>(x.data(), x.data() + size), s.t + dt_};
    if (!(porous_mass(out.f, grid_) > 0.0)) throw Error(ErrorKind::NegativeMass, "mass became non-positive");
    return out;
  }

  /// lap(f^m - m M^{m-1} f) with no-flux walls, conservative 5-point form.
  std::vector<double> explicit_part(const std::vector<double>& f) const {
    const int n = grid_.n();
    std::vector<double> h(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) h[i] = std::pow(f[i], m_) - m_ * mpow_[i] * f[i];
    std::vector<double> out(f.size(), 0.0);
    const double inv = 1.0 / (grid_.dv() * grid_.dv());
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const std::size_t c = idx(j, k);
        double acc = 0.0;
        if (j > 0) acc += h[idx(j - 1, k)] - h[c];
        if (j < n - 1) acc += h[idx(j + 1, k)] - h[c];
        if (k > 0) acc += h[idx(j, k - 1)] - h[c];
        if (k < n - 1) acc += h[idx(j, k + 1)] - h[c];
        out[c] = acc * inv;
      }
    return out;
  }

 private:
  std::size_t idx(int j, int k) const { return static_cast<std::size_t>(j) * grid_.n() + k; }

  // L f = div(v f + m grad(M^{m-1} f)); faces carry J = a f_upwind - m dG/dv
  // with a = -v_face (the drift moves mass towards the origin) and G = M^{m-1} f.
  void assemble() {
    const int n = grid_.n();
    const double h = grid_.dv();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * n * 5);
    auto face = [&](std::size_t lo, std::size_t hi, double v_face) {
      // Contribution of the face between lo (smaller coordinate) and hi.
      const double a = -v_face;
      const double up_lo = a > 0.0 ? a : 0.0, up_hi = a > 0.0 ? 0.0 : a;
      const double dlo = -m_ * mpow_[lo] / h, dhi = m_ * mpow_[hi] / h;
      // J = up_lo f_lo + up_hi f_hi - (dhi f_hi + dlo f_lo) ... as flux from lo to hi.
      const double j_lo = up_lo - dlo, j_hi = up_hi - dhi;
      // d f_lo/dt -= J / h, d f_hi/dt += J / h; matrix is I - dt L.
      trip.emplace_back(lo, lo, dt_ * j_lo / h);
      trip.emplace_back(lo, hi, dt_ * j_hi / h);
      trip.emplace_back(hi, lo, -dt_ * j_lo / h);
      trip.emplace_back(hi, hi, -dt_ * j_hi / h);
    };
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        trip.emplace_back(idx(j, k), idx(j, k), 1.0);
        if (j < n - 1) face(idx(j, k), idx(j + 1, k), 0.5 * (grid_.node(j) + grid_.node(j + 1)));
        if (k < n - 1) face(idx(j, k), idx(j, k + 1), 0.5 * (grid_.node(k) + grid_.node(k + 1)));
      }
    matrix_.resize(static_cast<Eigen::Index>(n) * n, static_cast<Eigen::Index>(n) * n);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();
    lu_.analyzePattern(matrix_);
    lu_.factorize(matrix_);
    if (lu_.info() != Eigen::Success) throw Error(ErrorKind::LinearSolveFailure, "factorization failed");
  }

  VelocityGrid grid_;
  double m_;
  double dt_;
  double C_;
  std::vector<double> mpow_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

struct EntropyReport {
  double H;
  double dissipation;
};

/// H = sum w (|v|^2 f + m/(m-1) f^m) and D = sum w f |v + m/(m-1) grad f^{m-1}|^2.
/// Gradients are centered inside the support and one-sided where a neighbor is
/// empty or outside the box.
inline EntropyReport entropy(const std::vector<double>& f, const VelocityGrid& g, double m) {
  const int n = g.n();
  const double w = g.weight(), h = g.dv(), c = m / (m - 1.0);
  auto at = [&](int j, int k) { return f[static_cast<std::size_t>(j) * n + k]; };
  auto pw = [&](double x) { return std::pow(std::max(x, 0.0), m - 1.0); };
  auto grad = [&](int j, int k, int dj, int dk) {
    const int jm = j - dj, km = k - dk, jp = j + dj, kp = k + dk;
    const bool has_m = jm >= 0 && km >= 0 && at(jm, km) > 0.0;
    const bool has_p = jp < n && kp < n && at(jp, kp) > 0.0;
    if (has_m && has_p) return (pw(at(jp, kp)) - pw(at(jm, km))) / (2.0 * h);
    if (has_p) return (pw(at(jp, kp)) - pw(at(j, k))) / h;
    if (has_m) return (pw(at(j, k)) - pw(at(jm, km))) / h;
    return 0.0;
  };
  double H = 0.0, D = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double fv = at(j, k), vx = g.node(j), vy = g.node(k);
      H += (vx * vx + vy * vy) * fv + c * std::pow(std::max(fv, 0.0), m);
      if (fv > 0.0) {
        const double ax = vx + c * grad(j, k, 1, 0), ay = vy + c * grad(j, k, 0, 1);
        D += fv * (ax * ax + ay * ay);
      }
    }
  return {w * H, w * D};
}

struct RescaledDensity {
  std::vector<double> g;
  double s;
  double mass_factor;  // int g / int f
};

/// g(v) = f(v/s)/s with s = sqrt(1 + 2t), bilinear in f on the same lattice;
/// points mapping outside the lattice get the nearest interior value's
/// extension by zero.
inline RescaledDensity rescale_back(const std::vector<double>& f, const VelocityGrid& grid, double t_original) {
  if (!(t_original >= 0.0)) throw Error(ErrorKind::ConfigError, "time must be nonnegative");
  const int n = grid.n();
  const double s = std::sqrt(1.0 + 2.0 * t_original);
  const double h = grid.dv(), lo = grid.node(0);
  auto sample = [&](double x, double y) {
    const double fx = (x - lo) / h, fy = (y - lo) / h;
    const int j = static_cast<int>(std::floor(fx)), k = static_cast<int>(std::floor(fy));
    const double tx = fx - j, ty = fy - k;
    auto at = [&](int a, int b) {
      return (a < 0 || b < 0 || a >= n || b >= n) ? 0.0 : f[static_cast<std::size_t>(a) * n + b];
    };
    return (1 - tx) * (1 - ty) * at(j, k) + tx * (1 - ty) * at(j + 1, k) + (1 - tx) * ty * at(j, k + 1) +
           tx * ty * at(j + 1, k + 1);
  };
  RescaledDensity out{std::vector<double>(f.size()), s, 0.0};
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      out.g[static_cast<std::size_t>(j) * n + k] = sample(grid.node(j) / s, grid.node(k) / s) / s;
  const double mf = porous_mass(f, grid);
  out.mass_factor = mf > 0.0 ? porous_mass(out.g, grid) / mf : 0.0;
  return out;
}

}  // namespace kap

#endif  // KAP_FOKKER_PLANCK_HPP
