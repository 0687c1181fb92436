#ifndef KAP_KERNEL_MODES_HPP
#define KAP_KERNEL_MODES_HPP

// Precomputed Fourier weights of the truncated, periodized collision integral
// for the kernel B = C_gamma |u|^gamma in two velocity dimensions.
//
// With f periodized on [-v_max, v_max]^2 and relative velocities truncated to
// |q| <= 2R, the gain weight of a mode pair (l, m) is
//
//   beta(l, m) = int_{|q|<=2R} int_{S^1} B e^{-i pi/v_max (l.q+ + m.q-)} dsigma dq,
//   q+ = (q - |q| sigma)/2,   q- = (q + |q| sigma)/2.
//
// Both circle integrals are 2 pi J0(.), leaving a radial integral in |q| that
// depends only on |l + m| and |l - m|. That radial integral is done with
// Gauss-Legendre quadrature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "kap/error.hpp"
#include "kap/grid.hpp"
#include "kap/quadrature.hpp"

namespace kap {

struct KernelParams {
  int n_v = 32;
  double v_max = 7.0;
  double gamma = 0.0;
  double c_gamma = 1.0 / (2.0 * std::numbers::pi);
  int quadrature_n = 64;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// Largest support radius R for which the periodized operator is alias-free:
/// a box of half-width v_max must contain (3 + sqrt 2) R / 2.
inline double antialiasing_radius(double v_max) { return 2.0 * v_max / (3.0 + std::numbers::sqrt2); }

inline constexpr double kQuadratureTolerance = 1e-8;

/// Cache key: every input that determines the tensor.
inline std::string kernel_cache_key(const KernelParams& p) {
  std::ostringstream os;
  os << std::setprecision(17) << "nv" << p.n_v << "_vmax" << p.v_max << "_g" << p.gamma << "_c"
     << p.c_gamma << "_q" << p.quadrature_n;
  return os.str();
}

class KernelModes {
 public:
  KernelModes() = default;

  const KernelParams& params() const { return params_; }
  int n_v() const { return params_.n_v; }
  /// Modes k satisfy |k_1|, |k_2| <= half_range(); the Nyquist row is dropped so
  /// the mode set is closed under k -> -k.
  int half_range() const { return params_.n_v / 2 - 1; }
  int side() const { return 2 * half_range() + 1; }
  int mode_count() const { return side() * side(); }
  int mode_index(int k1, int k2) const { return (k1 + half_range()) * side() + (k2 + half_range()); }
  double radius() const { return antialiasing_radius(params_.v_max); }

  double operator()(int l1, int l2, int m1, int m2) const {
    return beta_[static_cast<std::size_t>(mode_index(l1, l2)) * mode_count() + mode_index(m1, m2)];
  }
  double at(int l_index, int m_index) const {
    return beta_[static_cast<std::size_t>(l_index) * mode_count() + m_index];
  }
  const std::vector<double>& tensor() const { return beta_; }

  bool compatible(const VelocityGrid& g) const {
    return g.n() == params_.n_v && g.v_max() == params_.v_max;
  }

  std::string cache_key() const { return kernel_cache_key(params_); }

  static KernelModes compute(const KernelParams& p);

  void save(const std::filesystem::path& file) const;
  static KernelModes load(const std::filesystem::path& file);

  friend bool operator==(const KernelModes& a, const KernelModes& b) {
    return a.params_ == b.params_ && a.beta_ == b.beta_;
  }

 private:
  static constexpr char kMagic[8] = {'K', 'A', 'P', 'K', 'M', 'O', 'D', 'E'};
  static constexpr std::uint32_t kVersion = 1;

  KernelParams params_;
  std::vector<double> beta_;
};

namespace detail {

/// Radial table F(s_a, s_b) over the distinct squared mode norms s.
struct RadialTable {
  std::vector<int> norms;       // distinct squared norms, ascending
  std::vector<int> slot;        // squared norm -> position in `norms`, or -1
  std::vector<double> values;   // symmetric, norms.size()^2

  double operator()(int sa, int sb) const {
    return values[static_cast<std::size_t>(slot[sa]) * norms.size() + slot[sb]];
  }
};

inline RadialTable radial_table(const KernelParams& p, int quadrature_n) {
  const int h = p.n_v / 2 - 1;
  const int span = 2 * h;  // components of l + m and l - m lie in [-2h, 2h]
  RadialTable t;
  t.slot.assign(2 * span * span + 1, -1);
  for (int a = 0; a <= span; ++a)
    for (int b = 0; b <= span; ++b) t.slot[a * a + b * b] = 0;
  for (int s = 0; s < static_cast<int>(t.slot.size()); ++s)
    if (t.slot[s] == 0) {
      t.slot[s] = static_cast<int>(t.norms.size());
      t.norms.push_back(s);
    }
  const std::size_t d = t.norms.size();

  const double two_r = 2.0 * antialiasing_radius(p.v_max);
  const auto rule = gauss_legendre(quadrature_n, 0.0, two_r);
  const double freq = std::numbers::pi / (2.0 * p.v_max);
  const double circle = 2.0 * std::numbers::pi;

  // bessel[s][q] = 2 pi J0(freq sqrt(s) r_q)
  std::vector<double> bessel(d * quadrature_n);
  for (std::size_t s = 0; s < d; ++s) {
    const double k = freq * std::sqrt(static_cast<double>(t.norms[s]));
    for (int q = 0; q < quadrature_n; ++q)
      bessel[s * quadrature_n + q] = circle * std::cyl_bessel_j(0.0, k * rule.nodes[q]);
  }
  std::vector<double> radial_weight(quadrature_n);
  for (int q = 0; q < quadrature_n; ++q)
    radial_weight[q] = p.c_gamma * rule.weights[q] * std::pow(rule.nodes[q], p.gamma + 1.0);

  t.values.assign(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      double sum = 0.0;
      for (int q = 0; q < quadrature_n; ++q)
        sum += radial_weight[q] * bessel[a * quadrature_n + q] * bessel[b * quadrature_n + q];
      t.values[a * d + b] = t.values[b * d + a] = sum;
    }
  return t;
}

}  // namespace detail

inline KernelModes KernelModes::compute(const KernelParams& p) {
  if (p.n_v < 8 || p.n_v % 2 != 0) throw Error(ErrorKind::GridMismatch, "n_v must be even and >= 8");
  if (p.gamma < 0.0 || p.gamma > 1.0) throw Error(ErrorKind::ConfigError, "gamma must lie in [0, 1]");
  if (p.quadrature_n < 2) throw Error(ErrorKind::ConfigError, "quadrature_n must be >= 2");

  const auto table = detail::radial_table(p, p.quadrature_n);
  const auto refined = detail::radial_table(p, 2 * p.quadrature_n);
  double worst = 0.0;
  for (std::size_t i = 0; i < table.values.size(); ++i)
    worst = std::max(worst, std::abs(table.values[i] - refined.values[i]));
  if (!(worst <= kQuadratureTolerance)) {
    std::ostringstream os;
    os << "doubling quadrature_n from " << p.quadrature_n << " changes a kernel mode by " << worst;
    throw Error(ErrorKind::QuadratureUnconverged, os.str());
  }

  KernelModes km;
  km.params_ = p;
  const int h = km.half_range();
  const std::size_t count = km.mode_count();
  km.beta_.resize(count * count);
  for (int l1 = -h; l1 <= h; ++l1)
    for (int l2 = -h; l2 <= h; ++l2)
      for (int m1 = -h; m1 <= h; ++m1)
        for (int m2 = -h; m2 <= h; ++m2) {
          const int sp = (l1 + m1) * (l1 + m1) + (l2 + m2) * (l2 + m2);
          const int sm = (l1 - m1) * (l1 - m1) + (l2 - m2) * (l2 - m2);
          km.beta_[static_cast<std::size_t>(km.mode_index(l1, l2)) * count + km.mode_index(m1, m2)] =
              table(std::min(sp, sm), std::max(sp, sm));
        }
  return km;
}

inline void KernelModes::save(const std::filesystem::path& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write kernel cache " + file.string());
  os.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::int32_t ints[2] = {params_.n_v, params_.quadrature_n};
  os.write(reinterpret_cast<const char*>(ints), sizeof ints);
  const double reals[3] = {params_.v_max, params_.gamma, params_.c_gamma};
  os.write(reinterpret_cast<const char*>(reals), sizeof reals);
  const std::uint64_t count = beta_.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  os.write(reinterpret_cast<const char*>(beta_.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
  if (!os) throw Error(ErrorKind::IoError, "short write to kernel cache " + file.string());
}

inline KernelModes KernelModes::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot read kernel cache " + file.string());
  char magic[8];
  std::uint32_t version = 0;
  is.read(magic, sizeof magic);
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!is || !std::equal(magic, magic + 8, kMagic) || version != kVersion)
    throw Error(ErrorKind::SchemaMismatch, "not a version-1 kernel cache: " + file.string());
  std::int32_t ints[2];
  double reals[3];
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(ints), sizeof ints);
  is.read(reinterpret_cast<char*>(reals), sizeof reals);
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  KernelModes km;
  km.params_ = {ints[0], reals[0], reals[1], reals[2], ints[1]};
  if (!is || count != static_cast<std::uint64_t>(km.mode_count()) * km.mode_count())
    throw Error(ErrorKind::SchemaMismatch, "kernel cache size mismatch: " + file.string());
  km.beta_.resize(count);
  is.read(reinterpret_cast<char*>(km.beta_.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw Error(ErrorKind::IoError, "truncated kernel cache " + file.string());
  return km;
}

inline KernelModes precompute_kernel_modes(const VelocityGrid& g, double gamma, double c_gamma,
                                           int quadrature_n) {
  return KernelModes::compute({g.n(), g.v_max(), gamma, c_gamma, quadrature_n});
}

/// Loads the tensor from `dir` when a cache file for `p` exists, otherwise
/// computes and stores it. An empty `dir` disables caching.
inline std::shared_ptr<const KernelModes> load_or_compute(const KernelParams& p,
                                                          const std::filesystem::path& dir) {
  if (dir.empty()) return std::make_shared<const KernelModes>(KernelModes::compute(p));
  const auto file = dir / ("kernel_" + kernel_cache_key(p) + ".bin");
  if (std::filesystem::exists(file)) {
    auto km = KernelModes::load(file);
    if (km.params() == p) return std::make_shared<const KernelModes>(std::move(km));
  }
  auto km = KernelModes::compute(p);
  std::filesystem::create_directories(dir);
  km.save(file);
  return std::make_shared<const KernelModes>(std::move(km));
}

}  // namespace kap

#endif  // KAP_KERNEL_MODES_HPP
