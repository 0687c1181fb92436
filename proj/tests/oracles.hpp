#ifndef KAP_TESTS_ORACLES_HPP
#define KAP_TESTS_ORACLES_HPP

// Slow, direct evaluations used to check the fast code paths.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "kap/grid.hpp"
#include "kap/kernel_modes.hpp"

namespace oracle {

using cplx = std::complex<double>;

/// Direct double-sum evaluation of the truncated periodized collision
/// operator on one cell.
///
/// Modes are taken from the lattice DFT f^_k = n^-2 sum_j f_j e^{-2 pi i j.k/n}.
/// Retained modes R = [-(n/2-1), n/2-1]^2. The extended set E = [-n/2, n/2]^2
/// carries each lattice mode spread evenly over its images (a component at
/// n/2 has the images +-n/2). For k in R,
///   Q^_k = sum_{l,m in R, l+m=k} beta(l,m) f^_l f^_m - sum_{l in E, m in R, l+m=k} beta(m,m) f^_l f^_m,
/// and a lattice mode with an n/2 component gets the loss sum over its images.
inline std::vector<double> direct_collision(const std::vector<double>& f, const kap::KernelModes& km) {
  const int n = km.n_v(), h = km.half_range(), half = n / 2;
  const double two_pi = 2.0 * std::numbers::pi;
  auto lattice = [&](int k) { return ((k % n) + n) % n; };

  std::vector<cplx> fh(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      cplx s = 0.0;
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) s += f[j * n + l] * std::polar(1.0, -two_pi * (a * j + b * l) / n);
      fh[a * n + b] = s / double(n * n);
    }
  auto ext = [&](int k1, int k2) {
    double w = 1.0;
    if (std::abs(k1) == half) w *= 0.5;
    if (std::abs(k2) == half) w *= 0.5;
    return w * fh[lattice(k1) * n + lattice(k2)];
  };
  auto ret = [&](int k1, int k2) { return fh[lattice(k1) * n + lattice(k2)]; };

  auto loss = [&](int k1, int k2) {
    cplx s = 0.0;
    for (int m1 = -h; m1 <= h; ++m1)
      for (int m2 = -h; m2 <= h; ++m2) {
        const int l1 = k1 - m1, l2 = k2 - m2;
        if (std::abs(l1) > half || std::abs(l2) > half) continue;
        s += km(m1, m2, m1, m2) * ext(l1, l2) * ret(m1, m2);
      }
    return s;
  };

  std::vector<cplx> qh(static_cast<std::size_t>(n) * n, 0.0);
  for (int k1 = -h; k1 <= h; ++k1)
    for (int k2 = -h; k2 <= h; ++k2) {
      cplx gain = 0.0;
      for (int m1 = -h; m1 <= h; ++m1)
        for (int m2 = -h; m2 <= h; ++m2) {
          const int l1 = k1 - m1, l2 = k2 - m2;
          if (std::abs(l1) > h || std::abs(l2) > h) continue;
          gain += km(l1, l2, m1, m2) * ret(l1, l2) * ret(m1, m2);
        }
      qh[lattice(k1) * n + lattice(k2)] = gain - loss(k1, k2);
    }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a != half && b != half) continue;
      const int k1 = a < half ? a : a - n, k2 = b < half ? b : b - n;
      cplx s = 0.0;
      for (int p : (k1 == -half ? std::vector<int>{-half, half} : std::vector<int>{k1}))
        for (int q : (k2 == -half ? std::vector<int>{-half, half} : std::vector<int>{k2})) s -= loss(p, q);
      qh[a * n + b] = s;
    }

  std::vector<double> q(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      cplx s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += qh[a * n + b] * std::polar(1.0, two_pi * (a * j + b * l) / n);
      q[j * n + l] = s.real();
    }
  return q;
}

/// beta(l, m) by brute-force quadrature of the defining double integral over
/// the relative velocity disc |q| <= 2R and the unit circle, with no Bessel
/// reduction: composite Simpson in |q|, trapezoid in both angles.
inline double kernel_mode(int l1, int l2, int m1, int m2, double v_max, double gamma, double c_gamma) {
  const double R = kap::antialiasing_radius(v_max);
  const double s = std::numbers::pi / v_max;
  const int nr = 400, na = 96;
  const double hr = 2.0 * R / nr, ha = 2.0 * std::numbers::pi / na;
  double total = 0.0;
  for (int ir = 0; ir <= nr; ++ir) {
    const double r = ir * hr;
    const double simpson = (ir == 0 || ir == nr) ? 1.0 : (ir % 2 ? 4.0 : 2.0);
    double ang = 0.0;
    for (int ip = 0; ip < na; ++ip) {
      const double qx = r * std::cos(ip * ha), qy = r * std::sin(ip * ha);
      for (int it = 0; it < na; ++it) {
        const double sx = std::cos(it * ha), sy = std::sin(it * ha);
        const double px = 0.5 * (qx - r * sx), py = 0.5 * (qy - r * sy);
        const double mx = 0.5 * (qx + r * sx), my = 0.5 * (qy + r * sy);
        ang += std::cos(s * (l1 * px + l2 * py + m1 * mx + m2 * my));
      }
    }
    const double kernel = r > 0.0 ? c_gamma * std::pow(r, gamma) : (gamma == 0.0 ? c_gamma : 0.0);
    total += simpson * kernel * r * ang * ha * ha;
  }
  return total * hr / 3.0;
}

/// Nonnegative random cell with a smooth Gaussian core plus noise.
inline std::vector<double> random_cell(const kap::VelocityGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = g.n();
  const double cx = 0.5 * (u(rng) - 0.5), cy = 0.5 * (u(rng) - 0.5), T = 0.5 + u(rng);
  std::vector<double> f(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double dx = g.node(j) - cx, dy = g.node(k) - cy;
      f[j * n + k] = std::exp(-(dx * dx + dy * dy) / (2.0 * T)) + 0.2 * u(rng);
    }
  return f;
}

/// Two Gaussian beams with random centers, temperatures and weights: smooth,
/// far from equilibrium and essentially supported inside the alias-free ball
/// for v_max = 7.
inline std::vector<double> two_beam_cell(const kap::VelocityGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = g.n();
  std::vector<double> f(static_cast<std::size_t>(n) * n, 0.0);
  for (int beam = 0; beam < 2; ++beam) {
    const double cx = 1.5 * u(rng) - 0.75, cy = 1.5 * u(rng) - 0.75, T = 0.4 + 0.6 * u(rng), w = 0.5 + u(rng);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double dx = g.node(j) - cx, dy = g.node(k) - cy;
        f[j * n + k] += w * std::exp(-(dx * dx + dy * dy) / (2.0 * T)) / (2.0 * std::numbers::pi * T);
      }
  }
  return f;
}

inline double rel_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += std::abs(a[i] - b[i]);
    r += std::abs(b[i]);
  }
  return d / r;
}

}  // namespace oracle

#endif  // KAP_TESTS_ORACLES_HPP
