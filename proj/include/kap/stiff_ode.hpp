#ifndef KAP_STIFF_ODE_HPP
#define KAP_STIFF_ODE_HPP

// Penalized implicit-explicit integrators for df/dt = Q(f)/eps.
//
// The stiff source is split as (Q - P)/eps + P/eps where P is a well-balanced
// operator whose implicit solve is supplied in closed form by the system. Only
// P is ever treated implicitly, so no nonlinear solver is needed.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "kap/error.hpp"

namespace kap {

template <class State>
struct PenalizedSystem {
  std::function<State(const State&)> q_apply;
  std::function<State(const State&)> p_apply;
  /// Returns f solving f - (dt/eps) P(f) = rhs. The trapezoidal stage calls it with dt/2.
  std::function<State(const State& rhs, double dt, double eps)> p_implicit_solve;
  double eps = 1.0;
};

/// (f' - f)/dt = [Q(f) - P(f)]/eps + P(f')/eps.
template <class State>
State imex1_step(const PenalizedSystem<State>& sys, const State& f, double dt) {
  if (!(dt > 0.0) || !(sys.eps > 0.0)) throw Error(ErrorKind::SolveFailure, "dt and eps must be > 0");
  const State rhs = f + (dt / sys.eps) * (sys.q_apply(f) - sys.p_apply(f));
  return sys.p_implicit_solve(rhs, dt, sys.eps);
}

/// First-order half step to t + dt/2, then midpoint rule for Q - P and the
/// trapezoidal rule for P.
template <class State>
State imex2_step(const PenalizedSystem<State>& sys, const State& f, double dt) {
  if (!(dt > 0.0) || !(sys.eps > 0.0)) throw Error(ErrorKind::SolveFailure, "dt and eps must be > 0");
  const double eps = sys.eps;
  const State p_n = sys.p_apply(f);
  const State stage_rhs = f + (0.5 * dt / eps) * (sys.q_apply(f) - p_n);
  const State f_star = sys.p_implicit_solve(stage_rhs, 0.5 * dt, eps);
  const State rhs =
      f + (dt / eps) * (sys.q_apply(f_star) - sys.p_apply(f_star)) + (0.5 * dt / eps) * p_n;
  return sys.p_implicit_solve(rhs, 0.5 * dt, eps);
}

template <class State>
State explicit_euler_step(const PenalizedSystem<State>& sys, const State& f, double dt) {
  return f + (dt / sys.eps) * sys.q_apply(f);
}

/// Explicit midpoint Runge-Kutta; this is imex2 with P = 0.
template <class State>
State explicit_rk2_step(const PenalizedSystem<State>& sys, const State& f, double dt) {
  const State half = f + (0.5 * dt / sys.eps) * sys.q_apply(f);
  return f + (dt / sys.eps) * sys.q_apply(half);
}

/// Amplification factor of imex1 on Q = -lambda f, P = -nu lambda f.
inline std::complex<double> amplification_factor(std::complex<double> lambda, double nu,
                                                 double eps, double dt) {
  return 1.0 - lambda * dt / (eps + nu * lambda * dt);
}

enum class Scheme { Imex1, Imex2, ExplicitRk2, ExplicitEuler };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Imex1: return "imex1";
    case Scheme::Imex2: return "imex2";
    case Scheme::ExplicitRk2: return "explicit_rk2";
    case Scheme::ExplicitEuler: return "explicit_euler";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "imex1") return Scheme::Imex1;
  if (s == "imex2") return Scheme::Imex2;
  if (s == "explicit_rk2") return Scheme::ExplicitRk2;
  if (s == "explicit_euler") return Scheme::ExplicitEuler;
  throw Error(ErrorKind::ConfigError, "unknown scheme '" + s + "'");
}

template <class State>
State step(Scheme scheme, const PenalizedSystem<State>& sys, const State& f, double dt) {
  switch (scheme) {
    case Scheme::Imex1: return imex1_step(sys, f, dt);
    case Scheme::Imex2: return imex2_step(sys, f, dt);
    case Scheme::ExplicitRk2: return explicit_rk2_step(sys, f, dt);
    case Scheme::ExplicitEuler: return explicit_euler_step(sys, f, dt);
  }
  return f;
}

// ---------------------------------------------------------------------------
// The 3x3 complex multi-scale test: a fast decaying block and an oscillator.

using Vector3c = Eigen::Vector3cd;
using Matrix3c = Eigen::Matrix3cd;

inline Matrix3c linear_test_matrix() {
  using C = std::complex<double>;
  Matrix3c a;
  a << C(-1000, 0), C(1, 0), C(0, 0),
       C(-1, 0), C(-1000, 0), C(0, 0),
       C(0, 0), C(0, 0), C(0, 1);
  return a;
}

/// Q(f) = A f and P(f) = nu A f, with eps = 1.
inline PenalizedSystem<Vector3c> linear_test_system(double nu) {
  const Matrix3c a = linear_test_matrix();
  PenalizedSystem<Vector3c> sys;
  sys.eps = 1.0;
  sys.q_apply = [a](const Vector3c& f) -> Vector3c { return a * f; };
  sys.p_apply = [a, nu](const Vector3c& f) -> Vector3c { return nu * (a * f); };
  sys.p_implicit_solve = [a, nu](const Vector3c& rhs, double dt, double eps) -> Vector3c {
    const Matrix3c m = Matrix3c::Identity() - (dt * nu / eps) * a;
    Eigen::PartialPivLU<Matrix3c> lu(m);
    Vector3c x = lu.solve(rhs);
    if (!x.allFinite() || (m * x - rhs).norm() > 1e-12 * (1.0 + rhs.norm()))
      throw Error(ErrorKind::SolveFailure, "penalty system solve");
    return x;
  };
  return sys;
}

struct TrajectorySample {
  double t;
  Vector3c f;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool overflow = false;
  double overflow_time = 0.0;
};

inline constexpr double kOverflowNorm = 1e10;

/// Integrates the linear test from (1, 1, 1) and records every step. Stops early
/// (flagging overflow) once the state norm exceeds kOverflowNorm.
inline Trajectory run_linear_test(double nu, double dt, double t_end, Scheme scheme) {
  const auto sys = linear_test_system(nu);
  Trajectory tr;
  Vector3c f = Vector3c::Ones();
  tr.samples.push_back({0.0, f});
  const long steps = std::lround(std::ceil(t_end / dt - 1e-9));
  for (long n = 1; n <= steps; ++n) {
    f = step(scheme, sys, f, dt);
    const double t = n * dt;
    tr.samples.push_back({t, f});
    if (!f.allFinite() || f.norm() > kOverflowNorm) {
      tr.overflow = true;
      tr.overflow_time = t;
      break;
    }
  }
  return tr;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,re_f1,im_f1,re_f2,im_f2,re_f3,im_f3\n";
  os.precision(17);
  for (const auto& s : tr.samples) {
    os << s.t;
    for (int c = 0; c < 3; ++c) os << ',' << s.f[c].real() << ',' << s.f[c].imag();
    os << '\n';
  }
}

}  // namespace kap

#endif  // KAP_STIFF_ODE_HPP
