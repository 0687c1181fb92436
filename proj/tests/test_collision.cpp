#include <gtest/gtest.h>

#include <random>

#include "kap/collision.hpp"
#include "oracles.hpp"

using namespace kap;

namespace {

std::shared_ptr<const KernelModes> modes(int n, double v_max = 7.0) {
  return std::make_shared<const KernelModes>(
      precompute_kernel_modes(VelocityGrid(n, v_max), 0.0, 1.0 / (2.0 * std::numbers::pi), 64));
}

std::vector<double> cell_maxwellian(const VelocityGrid& g, double rho, double ux, double uy, double T) {
  std::vector<double> m(g.size());
  maxwellian_cell(Conserved::from_primitive(rho, ux, uy, T), g, m);
  return m;
}

double l1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

TEST(Bgk, ApplyVanishesOnMaxwellian) {
  const VelocityGrid g(16, 6.0);
  const SpatialMesh mesh(5, 0.0, 1.0, Boundary::Periodic);
  MacroState U;
  for (int i = 0; i < 5; ++i) U.push_back(Conserved::from_primitive(1.0 + 0.2 * i, 0.1 * i, -0.05 * i, 0.6 + 0.1 * i));
  const auto f = maxwellian(U, g);
  const auto p = bgk_apply(f, U, PenaltyConfig{2.0, 1.0}, g);
  for (double x : p.values()) EXPECT_EQ(x, 0.0);
}

TEST(Bgk, ImplicitSolveIsExactInverse) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Distribution rhs(4, 8), m(4, 8);
  for (auto& x : rhs.values()) x = u(rng);
  for (auto& x : m.values()) x = u(rng);
  const std::vector<double> beta{0.5, 1.0, 2.0, 4.0}, eps{1e-6, 1e-2, 1.0, 0.3};
  const double dt = 0.07;
  const auto f = bgk_implicit_solve(rhs, m, beta, eps, dt);
  for (int i = 0; i < 4; ++i)
    for (std::size_t a = 0; a < f.cell_size(); ++a) {
      const double r = f.cell(i)[a] - rhs.cell(i)[a] - beta[i] * dt / eps[i] * (m.cell(i)[a] - f.cell(i)[a]);
      EXPECT_LE(std::abs(r), 1e-14 * (1.0 + beta[i] * dt / eps[i]));
    }
}

TEST(Bgk, ImplicitSolveLimits) {
  Distribution rhs(1, 8, 0.3), m(1, 8, 0.9);
  const std::vector<double> beta{2.0};
  const auto small_dt = bgk_implicit_solve(rhs, m, beta, std::vector<double>{1.0}, 1e-14);
  const auto small_eps = bgk_implicit_solve(rhs, m, beta, std::vector<double>{1e-14}, 0.1);
  for (double x : small_dt.values()) EXPECT_NEAR(x, 0.3, 1e-13);
  for (double x : small_eps.values()) EXPECT_NEAR(x, 0.9, 1e-12);
}

TEST(KernelModes, SymmetryAndParity) {
  const auto km = modes(12);
  const int h = km->half_range();
  for (int l1 = -h; l1 <= h; ++l1)
    for (int l2 = -h; l2 <= h; ++l2)
      for (int m1 = -h; m1 <= h; m1 += 2)
        for (int m2 = -h; m2 <= h; m2 += 3) {
          EXPECT_EQ((*km)(l1, l2, m1, m2), (*km)(m1, m2, l1, l2));
          EXPECT_EQ((*km)(l1, l2, m1, m2), (*km)(-l1, -l2, -m1, -m2));
        }
}

TEST(KernelModes, MatchesBruteForceQuadrature) {
  const double v_max = 7.0, c = 1.0 / (2.0 * std::numbers::pi);
  const auto km = modes(8, v_max);
  const int samples[][4] = {{0, 0, 0, 0}, {1, 0, 0, 0}, {1, 2, -1, 0}, {3, -3, 2, 1}, {-2, 1, 1, -3}, {3, 3, 3, 3}};
  for (const auto& s : samples) {
    const double want = oracle::kernel_mode(s[0], s[1], s[2], s[3], v_max, 0.0, c);
    EXPECT_NEAR((*km)(s[0], s[1], s[2], s[3]), want, 1e-7 * std::max(1.0, std::abs(want)))
        << s[0] << "," << s[1] << "," << s[2] << "," << s[3];
  }
  // Hard spheres exercise the |q|^gamma weight.
  const auto hs = KernelModes::compute({8, v_max, 1.0, c, 64});
  for (const auto& s : samples) {
    const double want = oracle::kernel_mode(s[0], s[1], s[2], s[3], v_max, 1.0, c);
    EXPECT_NEAR(hs(s[0], s[1], s[2], s[3]), want, 1e-6 * std::max(1.0, std::abs(want)));
  }
}

TEST(KernelModes, CacheRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "kap_kernel_cache_test";
  std::filesystem::remove_all(dir);
  const KernelParams p{8, 5.0, 0.0, 1.0 / (2.0 * std::numbers::pi), 64};
  const auto a = load_or_compute(p, dir);
  const auto b = load_or_compute(p, dir);
  EXPECT_TRUE(*a == *b);
  std::filesystem::remove_all(dir);
}

TEST(KernelModes, RejectsBadParameters) {
  try {
    KernelModes::compute({8, 7.0, 2.0, 0.1, 64});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
  try {
    KernelModes::compute({8, 7.0, 0.0, 0.1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::QuadratureUnconverged);
  }
}

TEST(Spectral, MatchesDirectSum) {
  const VelocityGrid g(8, 7.0);
  const auto km = modes(8);
  const SpectralCollision op(km);
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_cell(g, rng);
    std::vector<double> q(f.size());
    op.apply_cell(f, q);
    EXPECT_LE(oracle::rel_l1(q, oracle::direct_collision(f, *km)), 1e-6) << "trial " << trial;
  }
}

TEST(Spectral, IsQuadratic) {
  const VelocityGrid g(16, 7.0);
  const SpectralCollision op(modes(16));
  std::mt19937_64 rng(7);
  const auto f = oracle::random_cell(g, rng);
  auto f3 = f;
  for (auto& x : f3) x *= 3.0;
  std::vector<double> q(f.size()), q3(f.size());
  op.apply_cell(f, q);
  op.apply_cell(f3, q3);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(q3[i], 9.0 * q[i], 1e-12 * l1(q3));
}

TEST(Spectral, Conservation) {
  const VelocityGrid g(32, 7.0);
  const SpectralCollision op(modes(32));
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = oracle::two_beam_cell(g, rng);
    std::vector<double> q(f.size());
    op.apply_cell(f, q);
    const Conserved s = moment_sums(q, g);
    const double norm = g.weight() * l1(f);
    EXPECT_LE(std::abs(s.rho), 1e-10 * norm);
    EXPECT_LE(std::abs(s.mx), 1e-4 * norm);
    EXPECT_LE(std::abs(s.my), 1e-4 * norm);
    EXPECT_LE(std::abs(s.energy), 1e-4 * norm);
  }
}

TEST(Spectral, MaxwellianResidual) {
  const VelocityGrid g(32, 7.0);
  const SpectralCollision op(modes(32));
  for (const auto& m : {cell_maxwellian(g, 1.0, 0.0, 0.0, 1.0), cell_maxwellian(g, 0.5, 0.4, -0.2, 0.7)}) {
    std::vector<double> q(m.size());
    op.apply_cell(m, q);
    EXPECT_LE(l1(q) / l1(m), 1e-3);
  }
}

TEST(Spectral, EntropyProductionSign) {
  const VelocityGrid g(16, 7.0);
  const SpectralCollision op(modes(16));
  auto f = cell_maxwellian(g, 1.0, 0.0, 0.0, 1.0);
  for (int j = 0; j < g.n(); ++j)
    for (int k = 0; k < g.n(); ++k) f[j * g.n() + k] *= 1.0 + 0.1 * std::cos(g.node(j)) * std::sin(0.5 * g.node(k) + 0.3);
  std::vector<double> q(f.size());
  op.apply_cell(f, q);
  double production = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) production += g.weight() * q[i] * std::log(f[i]);
  EXPECT_LE(production, 1e-3 * g.weight() * l1(f));
}

TEST(CollisionModel, WellBalancedAndConservative) {
  const VelocityGrid g(16, 7.0);
  const CollisionModel model(g, std::make_shared<const SpectralCollision>(modes(16)));
  const Conserved u = Conserved::from_primitive(0.8, 0.3, 0.1, 0.9);
  std::vector<double> m(g.size()), q(g.size());
  model.equilibrium_cell(u, m);
  model.apply_cell(m, u, m, q);
  for (double x : q) EXPECT_EQ(x, 0.0);

  std::mt19937_64 rng(5);
  const auto f = oracle::random_cell(g, rng);
  const Conserved uf = moment_sums(f, g);
  model.equilibrium_cell(uf, m);
  model.apply_cell(f, uf, m, q);
  const Conserved s = moment_sums(q, g);
  const double norm = g.weight() * l1(f);
  for (double c : {s.rho, s.mx, s.my, s.energy}) EXPECT_LE(std::abs(c), 1e-12 * norm);
}

TEST(CollisionModel, BgkRelaxesToEquilibrium) {
  const VelocityGrid g(16, 7.0);
  const auto model = CollisionModel::bgk(g);
  std::mt19937_64 rng(9);
  const auto f = oracle::random_cell(g, rng);
  const Conserved u = moment_sums(f, g);
  std::vector<double> m(g.size()), q(g.size());
  model.equilibrium_cell(u, m);
  model.apply_cell(f, u, m, q);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(q[i], u.rho * (m[i] - f[i]));
}

TEST(CollisionModel, RejectsMismatchedGrid) {
  try {
    CollisionModel(VelocityGrid(16, 6.0), std::make_shared<const SpectralCollision>(modes(16)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
  }
}
