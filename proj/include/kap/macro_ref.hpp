#ifndef KAP_MACRO_REF_HPP
#define KAP_MACRO_REF_HPP

// Reference solvers for the fluid limits in one space dimension with two
// velocity components: compressible Euler and the BGK-derived Navier-Stokes
// system (mu = kappa = rho T), plus an exact Riemann solver.
//
// Gas law: p = rho T, E = rho |u|^2/2 + rho T, so gamma = (d_v + 2)/d_v = 2.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "kap/error.hpp"
#include "kap/grid.hpp"
#include "kap/transport.hpp"

namespace kap {

inline constexpr double kGasGamma = 2.0;

using MacroField = std::vector<Conserved>;

namespace detail {

inline void check_state(const Conserved& u, int cell) {
  const double internal = u.energy - 0.5 * (u.mx * u.mx + u.my * u.my) / u.rho;
  if (!(u.rho > 0.0) || !(internal > 0.0) || !std::isfinite(internal)) {
    std::ostringstream os;
    os << "vacuum or negative internal energy in cell " << cell;
    throw Error(ErrorKind::VacuumState, os.str());
  }
}

inline Conserved euler_flux(const Conserved& u) {
  const double ux = u.ux(), p = u.pressure();
  return {u.mx, u.mx * ux + p, u.my * ux, (u.energy + p) * ux};
}

inline double max_speed(const Conserved& u) {
  return std::abs(u.ux()) + std::sqrt(kGasGamma * u.temperature());
}

inline Conserved rusanov(const Conserved& l, const Conserved& r) {
  const double a = std::max(max_speed(l), max_speed(r));
  const Conserved fl = euler_flux(l), fr = euler_flux(r);
  return {0.5 * (fl.rho + fr.rho) - 0.5 * a * (r.rho - l.rho),
          0.5 * (fl.mx + fr.mx) - 0.5 * a * (r.mx - l.mx),
          0.5 * (fl.my + fr.my) - 0.5 * a * (r.my - l.my),
          0.5 * (fl.energy + fr.energy) - 0.5 * a * (r.energy - l.energy)};
}

// Ghost cell i (outside 0..n-1); walls reflect the normal momentum.
inline Conserved ghost(const MacroField& u, const SpatialMesh& mesh, int i) {
  const int n = mesh.n_x();
  if (i >= 0 && i < n) return u[i];
  if (mesh.bc() == Boundary::Periodic) return u[((i % n) + n) % n];
  Conserved g = u[i < 0 ? -1 - i : 2 * n - 1 - i];
  g.mx = -g.mx;
  return g;
}

inline Conserved limited_slope(const Conserved& a, const Conserved& b, const Conserved& c) {
  return {minmod(b.rho - a.rho, c.rho - b.rho), minmod(b.mx - a.mx, c.mx - b.mx),
          minmod(b.my - a.my, c.my - b.my), minmod(b.energy - a.energy, c.energy - b.energy)};
}

// Viscous and heat fluxes at face i+1/2 (sign: added to the right-hand side
// as +d/dx of the returned value).
inline Conserved viscous_flux(const Conserved& l, const Conserved& r, double dx, double eps) {
  const double rho_f = 0.5 * (l.rho + r.rho);
  const double T_f = 0.5 * (l.temperature() + r.temperature());
  const double mu = rho_f * T_f, kappa = rho_f * T_f;
  const double dux = (r.ux() - l.ux()) / dx, duy = (r.uy() - l.uy()) / dx;
  const double dT = (r.temperature() - l.temperature()) / dx;
  const double ux_f = 0.5 * (l.ux() + r.ux()), uy_f = 0.5 * (l.uy() + r.uy());
  // sigma_xx = 2 du_x/dx - (2/d_v) du_x/dx = du_x/dx and sigma_xy = du_y/dx for d_v = 2.
  const double sxx = dux, sxy = duy;
  return {0.0, eps * mu * sxx, eps * mu * sxy, eps * (mu * (sxx * ux_f + sxy * uy_f) + kappa * dT)};
}

}  // namespace detail

/// Semi-discrete right-hand side: MUSCL-minmod reconstruction with the local
/// Lax-Friedrichs flux, plus centered viscous terms when eps > 0.
inline MacroField macro_rhs(const MacroField& u, const SpatialMesh& mesh, double eps) {
  const int n = mesh.n_x();
  if (static_cast<int>(u.size()) != n) throw Error(ErrorKind::GridMismatch, "macro field size");
  for (int i = 0; i < n; ++i) detail::check_state(u[i], i);
  const double dx = mesh.dx();
  std::vector<Conserved> ext(n + 4), slope(n + 2);
  for (int i = -2; i < n + 2; ++i) ext[i + 2] = detail::ghost(u, mesh, i);
  for (int i = -1; i <= n; ++i) slope[i + 1] = detail::limited_slope(ext[i + 1], ext[i + 2], ext[i + 3]);
  std::vector<Conserved> flux(n + 1);
  for (int i = -1; i < n; ++i) {
    Conserved left = ext[i + 2], right = ext[i + 3];
    left += 0.5 * slope[i + 1];
    right += -0.5 * slope[i + 2];
    // Fall back to first order where the reconstruction is unphysical.
    const bool ok = [](const Conserved& a, const Conserved& b) {
      auto good = [](const Conserved& c) {
        return c.rho > 0.0 && c.energy - 0.5 * (c.mx * c.mx + c.my * c.my) / c.rho > 0.0;
      };
      return good(a) && good(b);
    }(left, right);
    if (!ok) {
      left = ext[i + 2];
      right = ext[i + 3];
    }
    Conserved f = detail::rusanov(left, right);
    if (eps > 0.0) f = f - detail::viscous_flux(ext[i + 2], ext[i + 3], dx, eps);
    flux[i + 1] = f;
  }
  MacroField rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = (-1.0 / dx) * (flux[i + 1] - flux[i]);
  return rhs;
}

/// Largest stable step. The Rusanov and viscous parts are both explicit, so
/// their numerical diffusion adds: dt (a/dx + 2 eps D/dx^2) <= cfl, D = max T
/// the diffusivity (mu or kappa)/rho.
inline double macro_dt(const MacroField& u, const SpatialMesh& mesh, double cfl, double eps) {
  double speed = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    detail::check_state(u[i], static_cast<int>(i));
    speed = std::max(speed, detail::max_speed(u[i]));
    diff = std::max(diff, u[i].temperature());
  }
  const double dx = mesh.dx();
  return cfl * dx / (speed + 2.0 * eps * diff / dx);
}

/// Two-stage strong-stability-preserving Runge-Kutta (Heun) step.
inline MacroField ns_step(const MacroField& u, const SpatialMesh& mesh, double dt, double eps) {
  const MacroField k1 = macro_rhs(u, mesh, eps);
  MacroField stage(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    stage[i] = u[i];
    stage[i] += dt * k1[i];
  }
  const MacroField k2 = macro_rhs(stage, mesh, eps);
  MacroField out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = 0.5 * u[i];
    out[i] += 0.5 * stage[i];
    out[i] += (0.5 * dt) * k2[i];
    detail::check_state(out[i], static_cast<int>(i));
  }
  return out;
}

inline MacroField euler_step(const MacroField& u, const SpatialMesh& mesh, double dt) {
  return ns_step(u, mesh, dt, 0.0);
}

/// Advances to t_end with the largest stable step, shortened to land on t_end.
inline MacroField run_macro(MacroField u, const SpatialMesh& mesh, double t_end, double eps,
                            double cfl = 0.9) {
  double t = 0.0;
  while (t < t_end) {
    double dt = macro_dt(u, mesh, cfl, eps);
    if (t + dt >= t_end) dt = t_end - t;
    u = ns_step(u, mesh, dt, eps);
    t = (t + dt >= t_end) ? t_end : t + dt;
  }
  return u;
}

/// -kappa dT/dx with kappa = rho T, centered (one-sided at the ends).
inline std::vector<double> fourier_heat_flux(const MacroField& u, const SpatialMesh& mesh) {
  const int n = mesh.n_x();
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) {
    const int a = std::max(i - 1, 0), b = std::min(i + 1, n - 1);
    const double dT = (u[b].temperature() - u[a].temperature()) / ((b - a) * mesh.dx());
    q[i] = -u[i].rho * u[i].temperature() * dT;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Exact Riemann solver for a polytropic gas

struct Primitive {
  double rho, u, T;
  double p() const { return rho * T; }
};

namespace detail {

// Pressure function f_K(p) and its derivative for one side.
inline void pressure_function(double p, const Primitive& s, double gamma, double& f, double& df) {
  const double ps = s.p(), c = std::sqrt(gamma * ps / s.rho);
  if (p > ps) {
    const double a = 2.0 / ((gamma + 1.0) * s.rho), b = (gamma - 1.0) / (gamma + 1.0) * ps;
    const double q = std::sqrt(a / (p + b));
    f = (p - ps) * q;
    df = q * (1.0 - 0.5 * (p - ps) / (b + p));
  } else {
    const double r = p / ps;
    f = 2.0 * c / (gamma - 1.0) * (std::pow(r, (gamma - 1.0) / (2.0 * gamma)) - 1.0);
    df = 1.0 / (s.rho * c) * std::pow(r, -(gamma + 1.0) / (2.0 * gamma));
  }
}

}  // namespace detail

struct RiemannStar {
  double p, u;
};

/// Star-region pressure and velocity, solved by safeguarded Newton on the
/// pressure function to a 1e-14 relative step.
inline RiemannStar riemann_star(const Primitive& l, const Primitive& r, double gamma = kGasGamma) {
  if (!(l.rho > 0.0 && r.rho > 0.0 && l.T > 0.0 && r.T > 0.0))
    throw Error(ErrorKind::VacuumState, "Riemann data must be positive");
  const double cl = std::sqrt(gamma * l.p() / l.rho), cr = std::sqrt(gamma * r.p() / r.rho);
  if (2.0 * (cl + cr) / (gamma - 1.0) <= r.u - l.u)
    throw Error(ErrorKind::VacuumState, "Riemann data generate vacuum");
  double lo = 0.0, hi = std::max(l.p(), r.p());
  auto residual = [&](double p, double& d) {
    double fl, dfl, fr, dfr;
    detail::pressure_function(p, l, gamma, fl, dfl);
    detail::pressure_function(p, r, gamma, fr, dfr);
    d = dfl + dfr;
    return fl + fr + (r.u - l.u);
  };
  double d = 0.0;
  while (residual(hi, d) < 0.0) hi *= 2.0;
  double p = 0.5 * (l.p() + r.p());
  for (int iter = 0; iter < 200; ++iter) {
    const double g = residual(p, d);
    if (g > 0.0) hi = p; else lo = p;
    double next = p - g / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - p) <= 1e-14 * (next + p)) {
      p = next;
      break;
    }
    p = next;
  }
  double fl, dfl, fr, dfr;
  detail::pressure_function(p, l, gamma, fl, dfl);
  detail::pressure_function(p, r, gamma, fr, dfr);
  return {p, 0.5 * (l.u + r.u) + 0.5 * (fr - fl)};
}

/// Self-similar solution sampled at xi = x/t.
inline Primitive exact_riemann(const Primitive& l, const Primitive& r, double xi, double gamma = kGasGamma) {
  const RiemannStar star = riemann_star(l, r, gamma);
  const double g1 = (gamma - 1.0) / (gamma + 1.0);
  auto side = [&](const Primitive& s, double sign) -> Primitive {
    // sign = -1 for the left wave family, +1 for the right one; work in the
    // frame where the wave moves towards +sign.
    const double ps = s.p(), c = std::sqrt(gamma * ps / s.rho);
    const double us = sign * s.u, ustar = sign * star.u, x = sign * xi;
    if (star.p > ps) {
      const double shock = us + c * std::sqrt((gamma + 1.0) / (2.0 * gamma) * star.p / ps +
                                              (gamma - 1.0) / (2.0 * gamma));
      if (x >= shock) return s;
      const double rho = s.rho * (star.p / ps + g1) / (g1 * star.p / ps + 1.0);
      return {rho, star.u, star.p / rho};
    }
    const double head = us + c;
    if (x >= head) return s;
    const double rho_star = s.rho * std::pow(star.p / ps, 1.0 / gamma);
    const double c_star = c * std::pow(star.p / ps, (gamma - 1.0) / (2.0 * gamma));
    const double tail = ustar + c_star;
    if (x <= tail) return {rho_star, star.u, star.p / rho_star};
    const double cf = 2.0 / (gamma + 1.0) * (c + (gamma - 1.0) / 2.0 * (x - us));
    const double u_fan = 2.0 / (gamma + 1.0) * (-c + (gamma - 1.0) / 2.0 * us + x);
    const double rho = s.rho * std::pow(cf / c, 2.0 / (gamma - 1.0));
    const double p = ps * std::pow(cf / c, 2.0 * gamma / (gamma - 1.0));
    return {rho, sign * u_fan, p / rho};
  };
  return xi <= star.u ? side(l, -1.0) : side(r, 1.0);
}

}  // namespace kap

#endif  // KAP_MACRO_REF_HPP
