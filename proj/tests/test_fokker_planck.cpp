#include <gtest/gtest.h>

#include <numeric>

#include "kap/experiment.hpp"
#include "kap/fokker_planck.hpp"

using namespace kap;

namespace {

double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double sum(const std::vector<double>& a) { return std::accumulate(a.begin(), a.end(), 0.0); }

}  // namespace

TEST(Barenblatt, ClosedFormConstant) {
  EXPECT_NEAR(barenblatt_C(2.0 * std::numbers::pi, 3.0), 1.0, 1e-14);
  const double c1 = barenblatt_C(1.0, 3.0);
  EXPECT_NEAR(c1, std::pow(2.0 * std::numbers::pi, -2.0 / 3.0), 1e-15);
  EXPECT_NEAR(c1, 0.293684, 1e-6);
  EXPECT_NEAR(barenblatt_C(2.0, 3.0) / c1, std::pow(2.0, 2.0 / 3.0), 1e-13);
  EXPECT_THROW(barenblatt_C(0.0, 3.0), Error);
  EXPECT_THROW(barenblatt_C(1.0, 1.0), Error);
}

// The profile integrates to the prescribed mass.
TEST(Barenblatt, ProfileCarriesMass) {
  for (double m : {2.0, 3.0, 4.0})
    for (double mass : {0.3, 1.0, 4.0}) {
      const VelocityGrid g(600, 4.0);
      const double C = barenblatt_C(mass, m);
      EXPECT_NEAR(porous_mass(barenblatt_profile(g, C, m), g) / mass, 1.0, 2e-3) << m << " " << mass;
    }
}

TEST(PorousSolver, ConservesMass) {
  const VelocityGrid g(32, 3.0);
  PorousState s{ring_data(g), 0.0};
  const double mass = porous_mass(s.f, g);
  const PorousSolver solver(g, 3.0, mass, 0.02);
  for (int n = 0; n < 50; ++n) {
    s = solver.step(s);
    EXPECT_NEAR(porous_mass(s.f, g), mass, 1e-12 * mass);
  }
  EXPECT_NEAR(s.t, 1.0, 1e-12);
}

// Starting at the Barenblatt profile the discrete state drifts by a residual
// that shrinks with the lattice spacing. The drift is dominated by the support
// edge where the profile has an unbounded gradient, so it shrinks slowly.
TEST(PorousSolver, BarenblattIsNearlySteady) {
  std::vector<double> drift;
  for (int n : {32, 64, 128}) {
    const VelocityGrid g(n, 3.0);
    const PorousSolver solver(g, 3.0, 1.0, 0.01);
    const auto M = barenblatt_profile(g, solver.C(), 3.0);
    const auto next = solver.step({M, 0.0});
    drift.push_back(l1_diff(next.f, M) / sum(M) / 0.01);
  }
  EXPECT_LT(drift[1], 0.85 * drift[0]);
  EXPECT_LT(drift[2], 0.85 * drift[1]);
}

TEST(PorousSolver, RingDataRelaxes) {
  const auto run = run_porous(default_config("porous_medium"));
  const auto& first = run.series.front();
  const auto& last = run.series.back();
  for (std::size_t i = 0; i < run.series.size(); ++i) {
    EXPECT_GE(run.series[i].min_f, 0.0) << i;
    EXPECT_NEAR(run.series[i].mass, first.mass, 1e-12 * first.mass);
    if (i > 0) {
      EXPECT_LE(run.series[i].H_ct, run.series[i - 1].H_ct + 1e-10) << i;
    }
  }
  EXPECT_LT(last.dissipation, 1e-2 * first.dissipation);
  const auto& f = run.snapshots.back().second;
  EXPECT_NEAR(run.snapshots.back().first, 4.0, 1e-12);
  EXPECT_LT(l1_diff(f, run.barenblatt) / sum(run.barenblatt), 0.15);
}

TEST(PorousSolver, RejectsBadInput) {
  const VelocityGrid g(16, 3.0);
  EXPECT_THROW(PorousSolver(g, 3.0, 1.0, 0.0), Error);
  const PorousSolver solver(g, 3.0, 1.0, 0.01);
  try {
    solver.step({std::vector<double>(10, 1.0), 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
  }
  try {
    solver.step({std::vector<double>(g.size(), -1.0), 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeMass);
  }
}

TEST(Entropy, BarenblattMinimizes) {
  const VelocityGrid g(64, 3.0);
  const double mass = porous_mass(ring_data(g), g);
  const auto M = barenblatt_profile(g, barenblatt_C(mass, 3.0), 3.0);
  const auto eM = entropy(M, g, 3.0), eR = entropy(ring_data(g), g, 3.0);
  EXPECT_LT(eM.H, eR.H);
  EXPECT_LT(eM.dissipation, 1e-3);
  EXPECT_LT(eM.dissipation, 1e-3 * eR.dissipation);
  EXPECT_LT(entropy_ct(M, g, 3.0), entropy_ct(ring_data(g), g, 3.0));
}

TEST(Rescale, IdentityAtTimeZero) {
  const VelocityGrid g(32, 3.0);
  const auto f = ring_data(g);
  const auto r = rescale_back(f, g, 0.0);
  EXPECT_EQ(r.s, 1.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(r.g[i], f[i], 1e-15);
  EXPECT_NEAR(r.mass_factor, 1.0, 1e-14);
}

// g(v) = f(v/s)/s scales the two-dimensional mass by s.
TEST(Rescale, MassFactorIsS) {
  const VelocityGrid g(128, 6.0);
  const auto f = barenblatt_profile(g, barenblatt_C(1.0, 3.0), 3.0);
  for (double t : {0.25, 1.0}) {
    const auto r = rescale_back(f, g, t);
    EXPECT_NEAR(r.s, std::sqrt(1.0 + 2.0 * t), 1e-15);
    EXPECT_NEAR(r.mass_factor / r.s, 1.0, 1e-2) << t;
  }
  EXPECT_THROW(rescale_back(f, g, -1.0), Error);
}
