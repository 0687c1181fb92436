#include <gtest/gtest.h>

#include <complex>
#include <sstream>

#include "kap/stiff_ode.hpp"

using namespace kap;
using C = std::complex<double>;

namespace {

struct Scalar {
  double v;
  friend Scalar operator+(Scalar a, Scalar b) { return {a.v + b.v}; }
  friend Scalar operator-(Scalar a, Scalar b) { return {a.v - b.v}; }
  friend Scalar operator*(double s, Scalar a) { return {s * a.v}; }
};

// Q = -lambda f, P = -nu lambda f.
PenalizedSystem<Scalar> scalar_system(double lambda, double nu, double eps) {
  PenalizedSystem<Scalar> s;
  s.eps = eps;
  s.q_apply = [lambda](const Scalar& f) { return Scalar{-lambda * f.v}; };
  s.p_apply = [lambda, nu](const Scalar& f) { return Scalar{-nu * lambda * f.v}; };
  s.p_implicit_solve = [lambda, nu](const Scalar& r, double dt, double e) {
    return Scalar{r.v / (1.0 + dt * nu * lambda / e)};
  };
  return s;
}

}  // namespace

TEST(Imex1, ScalarClosedForm) {
  for (double lambda : {0.5, 3.0, 100.0})
    for (double nu : {0.0, 1.0, 2.0})
      for (double eps : {1e-6, 1e-2, 1.0})
        for (double dt : {1e-3, 0.1, 2.0}) {
          const auto s = scalar_system(lambda, nu, eps);
          const double got = imex1_step(s, Scalar{1.0}, dt).v;
          const double want = (eps + (nu - 1.0) * lambda * dt) / (eps + nu * lambda * dt);
          EXPECT_NEAR(got, want, 1e-14 * std::max(1.0, std::abs(want)));
          EXPECT_NEAR(got, amplification_factor(lambda, nu, eps, dt).real(), 1e-14 * std::max(1.0, std::abs(want)));
        }
}

TEST(Imex1, IdentityWithoutSources) {
  PenalizedSystem<Scalar> s = scalar_system(0.0, 0.0, 1.0);
  EXPECT_EQ(imex1_step(s, Scalar{0.37}, 5.0).v, 0.37);
  EXPECT_EQ(imex2_step(s, Scalar{0.37}, 5.0).v, 0.37);
}

TEST(Imex1, StiffLimitIsOneMinusInverseNu) {
  const auto s = scalar_system(1.0, 2.0, 1e-14);
  EXPECT_NEAR(imex1_step(s, Scalar{1.0}, 0.1).v, 0.5, 1e-12);
}

TEST(Imex2, ReducesToExplicitMidpoint) {
  for (double dt : {0.01, 0.3, 1.5}) {
    const auto s = scalar_system(1.0, 0.0, 1.0);
    EXPECT_NEAR(imex2_step(s, Scalar{1.0}, dt).v, 1.0 - dt + 0.5 * dt * dt, 1e-15);
    EXPECT_NEAR(explicit_rk2_step(s, Scalar{1.0}, dt).v, 1.0 - dt + 0.5 * dt * dt, 1e-15);
  }
}

TEST(Imex, RejectsNonPositiveStep) {
  const auto s = scalar_system(1.0, 1.0, 1.0);
  EXPECT_THROW(imex1_step(s, Scalar{1.0}, 0.0), Error);
  EXPECT_THROW(imex2_step(s, Scalar{1.0}, -1.0), Error);
}

TEST(Amplification, Examples) {
  EXPECT_NEAR(std::abs(amplification_factor(1.0, 1.0, 0.5, 2.0) - 0.5 / 2.5), 0.0, 1e-15);
  EXPECT_NEAR(amplification_factor(1.0, 2.0, 1e-300, 1.0).real(), 0.5, 1e-15);
  EXPECT_NEAR(amplification_factor(1.0, 0.0, 1.0, 3.0).real(), -2.0, 1e-15);
}

TEST(Amplification, StabilitySweep) {
  std::vector<C> lambdas;
  for (double mag : {1.0, 10.0, 1000.0})
    for (double phase : {0.0, 0.3, 0.7, 1.2, 1.5})  // Re lambda > 0
      lambdas.push_back(std::polar(mag, phase));
  for (double nu : {1.0, 1.5, 2.0, 5.0})
    for (C lambda : lambdas)
      for (double eps = 1e-6; eps <= 1.0 + 1e-12; eps *= 10.0)
        for (double dt = 1e-3; dt <= 10.0 + 1e-9; dt *= 10.0)
          EXPECT_LE(std::abs(amplification_factor(lambda, nu, eps, dt)), 1.0 + 1e-15)
              << lambda << " nu " << nu << " eps " << eps << " dt " << dt;
  for (double nu : {0.51, 0.75, 1.0})
    for (double lambda : {1.0, 10.0, 1000.0})
      for (double eps = 1e-6; eps <= 1.0 + 1e-12; eps *= 10.0)
        for (double dt = 1e-3; dt <= 10.0 + 1e-9; dt *= 10.0)
          EXPECT_LE(std::abs(amplification_factor(lambda, nu, eps, dt)), 1.0 + 1e-15);
}

TEST(Amplification, LStability) {
  for (double nu : {0.75, 1.0, 2.0, 4.0})
    for (double lambda : {1.0, 10.0, 1000.0})
      for (double dt : {1e-3, 0.1, 10.0}) {
        const C a = amplification_factor(lambda, nu, 1e-12, dt);
        EXPECT_NEAR(std::abs(a), std::abs(1.0 - 1.0 / nu), 1e-6);
        EXPECT_LT(std::abs(a), 1.0);
      }
}

TEST(LinearTest, MatrixSpectrum) {
  Eigen::ComplexEigenSolver<Matrix3c> es(linear_test_matrix());
  std::vector<C> ev(es.eigenvalues().data(), es.eigenvalues().data() + 3);
  for (C want : {C(-1000, 1), C(-1000, -1), C(0, 1)}) {
    double best = 1e300;
    for (C e : ev) best = std::min(best, std::abs(e - want));
    EXPECT_LT(best, 1e-9);
  }
}

TEST(LinearTest, ExplicitRk2Overflows) {
  const auto tr = run_linear_test(2.0, 0.3, 30.0, Scheme::ExplicitRk2);
  EXPECT_TRUE(tr.overflow);
  EXPECT_LT(tr.overflow_time, 30.0);
}

TEST(LinearTest, Imex1DampsOscillation) {
  const auto tr = run_linear_test(2.0, 0.3, 30.0, Scheme::Imex1);
  EXPECT_FALSE(tr.overflow);
  EXPECT_NEAR(tr.samples.back().t, 30.0, 1e-9);
  EXPECT_LT(std::abs(tr.samples.back().f[2]), 0.9);
  for (const auto& s : tr.samples) EXPECT_LE(s.f.norm(), std::sqrt(3.0) + 1e-12);
}

TEST(LinearTest, Imex2BoundedAndFastModesDecay) {
  const auto tr = run_linear_test(2.0, 0.3, 30.0, Scheme::Imex2);
  EXPECT_FALSE(tr.overflow);
  for (const auto& s : tr.samples) {
    EXPECT_LE(std::abs(s.f[2]), 1.0 + 1e-12);
    if (s.t >= 10.0 - 1e-9) {
      EXPECT_LT(std::abs(s.f[0]), 1e-8);
      EXPECT_LT(std::abs(s.f[1]), 1e-8);
    }
  }
}

// The third component is scalar: its per-step factor is the closed form of the
// two-stage scheme with Q = i f, P = nu i f, eps = 1.
TEST(LinearTest, Imex2ThirdComponentFactor) {
  const double dt = 0.3, nu = 2.0;
  const C z(0.0, dt);
  const C star = (1.0 + 0.5 * z * (1.0 - nu)) / (1.0 - 0.5 * z * nu);
  const C factor = (1.0 + z * (1.0 - nu) * star + 0.5 * z * nu) / (1.0 - 0.5 * z * nu);
  const auto tr = run_linear_test(nu, dt, 30.0, Scheme::Imex2);
  C expect = 1.0;
  for (std::size_t n = 1; n < tr.samples.size(); ++n) {
    expect *= factor;
    EXPECT_NEAR(std::abs(tr.samples[n].f[2] - expect), 0.0, 1e-12);
  }
}

TEST(LinearTest, Imex2IsSecondOrder) {
  // Error of the non-stiff component against exp(i t) at t = 3.
  std::vector<double> err;
  for (double dt : {0.05, 0.025, 0.0125, 0.00625}) {
    const auto tr = run_linear_test(2.0, dt, 3.0, Scheme::Imex2);
    err.push_back(std::abs(tr.samples.back().f[2] - std::exp(C(0.0, tr.samples.back().t))));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 1.9);
}

TEST(LinearTest, TrajectoryCsv) {
  const auto tr = run_linear_test(2.0, 0.3, 0.9, Scheme::Imex1);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("t,re_f1,im_f1,re_f2,im_f2,re_f3,im_f3\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(Scheme, NamesRoundTrip) {
  for (Scheme s : {Scheme::Imex1, Scheme::Imex2, Scheme::ExplicitRk2, Scheme::ExplicitEuler})
    EXPECT_EQ(scheme_from_string(to_string(s)), s);
  EXPECT_THROW(scheme_from_string("rk4"), Error);
}
