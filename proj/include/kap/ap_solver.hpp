#ifndef KAP_AP_SOLVER_HPP
#define KAP_AP_SOLVER_HPP

// Penalized asymptotic-preserving stepping for
//
//   df/dt + v_x df/dx = Q(f)/eps(x),
//
// with Q split as (Q - P) + P, P the BGK relaxation beta (M[f] - f). Transport
// and Q - P are explicit, P is implicit and solved in closed form because the
// moments of the new state follow from the explicit transport update alone.

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kap/collision.hpp"
#include "kap/error.hpp"
#include "kap/grid.hpp"
#include "kap/parallel.hpp"
#include "kap/stiff_ode.hpp"
#include "kap/transport.hpp"

namespace kap {

class KnudsenField {
 public:
  KnudsenField() = default;
  explicit KnudsenField(std::vector<double> eps) : eps_(std::move(eps)) {
    for (double e : eps_)
      if (!(e > 0.0)) throw Error(ErrorKind::ConfigError, "Knudsen number must be positive");
  }

  static KnudsenField constant(const SpatialMesh& mesh, double eps0) {
    return KnudsenField(std::vector<double>(mesh.n_x(), eps0));
  }

  /// eps0 + [tanh(1 - 11x) + tanh(1 + 11x)]/2 at the cell centers.
  static KnudsenField mixing(const SpatialMesh& mesh, double eps0) {
    std::vector<double> e(mesh.n_x());
    for (int i = 0; i < mesh.n_x(); ++i) {
      const double x = mesh.center(i);
      e[i] = eps0 + 0.5 * (std::tanh(1.0 - 11.0 * x) + std::tanh(1.0 + 11.0 * x));
    }
    return KnudsenField(std::move(e));
  }

  int size() const { return static_cast<int>(eps_.size()); }
  double operator[](int i) const { return eps_[i]; }
  const std::vector<double>& values() const { return eps_; }

 private:
  std::vector<double> eps_;
};

struct KineticState {
  Distribution f;
  double t = 0.0;
};

/// Holds everything a step needs besides the state: meshes, eps(x), the
/// penalty rule and the collision model. Immutable; steps are pure.
class KineticSolver {
 public:
  KineticSolver(SpatialMesh mesh, VelocityGrid vgrid, KnudsenField eps, PenaltyConfig penalty,
                std::shared_ptr<const CollisionModel> collision)
      : mesh_(std::move(mesh)), vgrid_(std::move(vgrid)), eps_(std::move(eps)), penalty_(penalty),
        collision_(std::move(collision)) {
    if (eps_.size() != mesh_.n_x()) throw Error(ErrorKind::GridMismatch, "Knudsen field size");
    if (!collision_ || !(collision_->grid() == vgrid_))
      throw Error(ErrorKind::GridMismatch, "collision model grid");
  }

  const SpatialMesh& mesh() const { return mesh_; }
  const VelocityGrid& vgrid() const { return vgrid_; }
  const KnudsenField& knudsen() const { return eps_; }
  const PenaltyConfig& penalty() const { return penalty_; }
  const CollisionModel& collision() const { return *collision_; }

  /// Largest step allowed by the transport CFL condition.
  double cfl_dt(double cfl) const { return cfl * mesh_.dx() / vgrid_.v_max(); }

  void check_dt(double dt) const {
    if (!(dt > 0.0) || dt > cfl_dt(1.0) * (1.0 + 1e-12))
      throw Error(ErrorKind::SolveFailure, "time step violates the transport CFL condition");
  }

  KineticState step(Scheme scheme, const KineticState& s, double dt) const {
    switch (scheme) {
      case Scheme::Imex1: return ap_step1(s, dt);
      case Scheme::Imex2: return ap_step2(s, dt);
      case Scheme::ExplicitRk2: return explicit_rk2(s, dt);
      case Scheme::ExplicitEuler: return explicit_euler(s, dt);
    }
    return s;
  }

  KineticState ap_step1(const KineticState& s, double dt) const {
    check_dt(dt);
    const int nx = mesh_.n_x();
    const Local now = local(s.f);
    const Distribution qp = q_minus_p(s.f, now);
    Distribution tilde = s.f;
    axpy(dt, transport_rhs(s.f, mesh_, vgrid_), tilde);
    const MacroState u_next = moments(tilde, vgrid_);
    const Distribution m_next = collision_->equilibrium(u_next);

    KineticState out{Distribution(nx, vgrid_.n()), s.t + dt};
    parallel_for(static_cast<std::size_t>(nx), [&](std::size_t ii) {
      const int i = static_cast<int>(ii);
      const double eps = eps_[i], beta = penalty_.beta(u_next[i]);
      auto rhs = tilde.cell(i);
      auto src = qp.cell(i);
      std::vector<double> r(rhs.size());
      for (std::size_t a = 0; a < r.size(); ++a) r[a] = rhs[a] + (dt / eps) * src[a];
      bgk_implicit_solve_cell(r, m_next.cell(i), beta, eps, dt, out.f.cell(i));
    });
    return out;
  }

  /// Half step of ap_step1 to f*, then midpoint for transport and Q - P and the
  /// trapezoidal rule for P. Transport sits in the explicit slot of both stages.
  KineticState ap_step2(const KineticState& s, double dt) const {
    check_dt(dt);
    const int nx = mesh_.n_x();
    const double half = 0.5 * dt;
    const Local now = local(s.f);
    const Distribution qp_now = q_minus_p(s.f, now);

    Distribution stage_tilde = s.f;
    axpy(half, transport_rhs(s.f, mesh_, vgrid_), stage_tilde);
    const MacroState u_star = moments(stage_tilde, vgrid_);
    const Distribution m_star = collision_->equilibrium(u_star);
    Distribution f_star(nx, vgrid_.n());
    parallel_for(static_cast<std::size_t>(nx), [&](std::size_t ii) {
      const int i = static_cast<int>(ii);
      const double eps = eps_[i], beta = penalty_.beta(u_star[i]);
      auto rhs = stage_tilde.cell(i);
      auto src = qp_now.cell(i);
      std::vector<double> r(rhs.size());
      for (std::size_t a = 0; a < r.size(); ++a) r[a] = rhs[a] + (half / eps) * src[a];
      bgk_implicit_solve_cell(r, m_star.cell(i), beta, eps, half, f_star.cell(i));
    });

    const Local star = local(f_star);
    const Distribution qp_star = q_minus_p(f_star, star);
    Distribution tilde = s.f;
    axpy(dt, transport_rhs(f_star, mesh_, vgrid_), tilde);
    const MacroState u_next = moments(tilde, vgrid_);
    const Distribution m_next = collision_->equilibrium(u_next);

    KineticState out{Distribution(nx, vgrid_.n()), s.t + dt};
    parallel_for(static_cast<std::size_t>(nx), [&](std::size_t ii) {
      const int i = static_cast<int>(ii);
      const double eps = eps_[i];
      const double beta_now = penalty_.beta(now.u[i]), beta_next = penalty_.beta(u_next[i]);
      auto ft = tilde.cell(i);
      auto src = qp_star.cell(i);
      auto fn = s.f.cell(i);
      auto mn = now.m.cell(i);
      auto mx = m_next.cell(i);
      auto dst = out.f.cell(i);
      const double denom = eps + 0.5 * beta_next * dt;
      for (std::size_t a = 0; a < dst.size(); ++a) {
        const double p_now = beta_now * (mn[a] - fn[a]);
        dst[a] = (eps * ft[a] + dt * (src[a] + 0.5 * p_now) + 0.5 * beta_next * dt * mx[a]) / denom;
      }
    });
    return out;
  }

  KineticState explicit_euler(const KineticState& s, double dt) const {
    check_dt(dt);
    KineticState out{s.f, s.t + dt};
    axpy(dt, full_rhs(s.f), out.f);
    return out;
  }

  /// Explicit midpoint rule on transport + Q/eps; the non-AP reference.
  KineticState explicit_rk2(const KineticState& s, double dt) const {
    check_dt(dt);
    Distribution mid = s.f;
    axpy(0.5 * dt, full_rhs(s.f), mid);
    KineticState out{s.f, s.t + dt};
    axpy(dt, full_rhs(mid), out.f);
    return out;
  }

  /// Equilibrium the scheme relaxes to (the collision model's Maxwellian).
  Distribution equilibrium(const Distribution& f) const {
    return collision_->equilibrium(moments(f, vgrid_));
  }

 private:
  struct Local {
    MacroState u;
    Distribution m;
  };

  Local local(const Distribution& f) const {
    MacroState u = moments(f, vgrid_);
    Distribution m = collision_->equilibrium(u);
    return {std::move(u), std::move(m)};
  }

  static void axpy(double a, const Distribution& x, Distribution& y) {
    auto& yv = y.values();
    const auto& xv = x.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += a * xv[i];
  }

  Distribution q_minus_p(const Distribution& f, const Local& loc) const {
    Distribution q = collision_->apply(f, loc.u, loc.m);
    for (int i = 0; i < f.n_x(); ++i) {
      const double beta = penalty_.beta(loc.u[i]);
      auto qi = q.cell(i);
      auto fi = f.cell(i);
      auto mi = loc.m.cell(i);
      for (std::size_t a = 0; a < qi.size(); ++a) qi[a] -= beta * (mi[a] - fi[a]);
    }
    return q;
  }

  Distribution full_rhs(const Distribution& f) const {
    const Local loc = local(f);
    Distribution r = transport_rhs(f, mesh_, vgrid_);
    const Distribution q = collision_->apply(f, loc.u, loc.m);
    for (int i = 0; i < f.n_x(); ++i) {
      auto ri = r.cell(i);
      auto qi = q.cell(i);
      for (std::size_t a = 0; a < ri.size(); ++a) ri[a] += qi[a] / eps_[i];
    }
    return r;
  }

  SpatialMesh mesh_;
  VelocityGrid vgrid_;
  KnudsenField eps_;
  PenaltyConfig penalty_;
  std::shared_ptr<const CollisionModel> collision_;
};

// ---------------------------------------------------------------------------
// Diagnostics

/// x-component of (1/eps) int (v - u)|v - u|^2 f dv for one cell.
inline double heat_flux_cell(std::span<const double> f, const Conserved& u, double eps,
                             const VelocityGrid& g) {
  const int n = g.n();
  const double ux = u.ux(), uy = u.uy();
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double cx = g.node(j) - ux;
    double row = 0.0;
    for (int k = 0; k < n; ++k) {
      const double cy = g.node(k) - uy;
      row += (cx * cx + cy * cy) * f[static_cast<std::size_t>(j) * n + k];
    }
    sum += cx * row;
  }
  return g.weight() * sum / eps;
}

inline std::vector<double> heat_flux(const Distribution& f, const MacroState& U, const KnudsenField& eps,
                                     const VelocityGrid& g) {
  std::vector<double> q(f.n_x());
  for (int i = 0; i < f.n_x(); ++i) q[i] = heat_flux_cell(f.cell(i), U[i], eps[i], g);
  return q;
}

/// Per-cell ||f - m||_1 / ||f||_1 on the lattice.
inline std::vector<double> distance_to_equilibrium(const Distribution& f, const Distribution& m) {
  std::vector<double> d(f.n_x());
  for (int i = 0; i < f.n_x(); ++i) {
    auto fi = f.cell(i);
    auto mi = m.cell(i);
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < fi.size(); ++a) {
      num += std::abs(fi[a] - mi[a]);
      den += std::abs(fi[a]);
    }
    d[i] = num / den;
  }
  return d;
}

/// Global ||f - m||_1 / ||f||_1.
inline double global_distance(const Distribution& f, const Distribution& m) {
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < f.values().size(); ++a) {
    num += std::abs(f.values()[a] - m.values()[a]);
    den += std::abs(f.values()[a]);
  }
  return num / den;
}

inline Conserved total_moments(const MacroState& U, double dx) {
  Conserved s;
  for (const auto& u : U) s += u;
  return dx * s;
}

struct CellDiagnostics {
  double x, rho, ux, uy, T, heat_flux, dist_maxwell;
};

inline std::vector<CellDiagnostics> diagnose(const KineticSolver& solver, const Distribution& f) {
  const auto U = moments(f, solver.vgrid());
  const auto q = heat_flux(f, U, solver.knudsen(), solver.vgrid());
  const auto d = distance_to_equilibrium(f, solver.collision().equilibrium(U));
  std::vector<CellDiagnostics> out(f.n_x());
  for (int i = 0; i < f.n_x(); ++i)
    out[i] = {solver.mesh().center(i), U[i].rho, U[i].ux(), U[i].uy(), U[i].temperature(), q[i], d[i]};
  return out;
}

// ---------------------------------------------------------------------------
// Initial data

/// Local equilibrium with rho(x), u(x), T(x) given per cell.
inline Distribution equilibrium_data(const KineticSolver& solver,
                                     const std::function<Conserved(double x)>& profile) {
  const auto& mesh = solver.mesh();
  MacroState U(mesh.n_x());
  for (int i = 0; i < mesh.n_x(); ++i) U[i] = profile(mesh.center(i));
  return solver.collision().equilibrium(U);
}

inline Conserved smooth_profile(double x) {
  return Conserved::from_primitive((11.0 - 9.0 * std::tanh(x)) / 10.0, 0.0, 0.0, (3.0 - std::tanh(x)) / 4.0);
}

inline Conserved sod_profile(double x) {
  return x <= 0.5 ? Conserved::from_primitive(1.0, 0.0, 0.0, 1.0)
                  : Conserved::from_primitive(0.125, 0.0, 0.0, 0.25);
}

/// Two counter-streaming beams rho0/2 [exp(-|v-u0|^2/T0) + exp(-|v+u0|^2/T0)],
/// u0 = (3/4, -3/4), on x in [-L, L] with k = pi/L.
inline Distribution mixing_data(const SpatialMesh& mesh, const VelocityGrid& g, double half_length) {
  const double k = std::numbers::pi / half_length;
  const double u1 = 0.75, u2 = -0.75;
  Distribution f(mesh.n_x(), g.n());
  for (int i = 0; i < mesh.n_x(); ++i) {
    const double x = mesh.center(i);
    const double rho0 = (2.0 + std::sin(k * x)) / 2.0;
    const double T0 = (5.0 + 2.0 * std::cos(k * x)) / 20.0;
    for (int j = 0; j < g.n(); ++j)
      for (int l = 0; l < g.n(); ++l) {
        const double vx = g.node(j), vy = g.node(l);
        const double a = (vx - u1) * (vx - u1) + (vy - u2) * (vy - u2);
        const double b = (vx + u1) * (vx + u1) + (vy + u2) * (vy + u2);
        f(i, j, l) = 0.5 * rho0 * (std::exp(-a / T0) + std::exp(-b / T0));
      }
  }
  return f;
}

}  // namespace kap

#endif  // KAP_AP_SOLVER_HPP
