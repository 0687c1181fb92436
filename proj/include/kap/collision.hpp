#ifndef KAP_COLLISION_HPP
#define KAP_COLLISION_HPP

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kap/error.hpp"
#include "kap/grid.hpp"
#include "kap/kernel_modes.hpp"
#include "kap/parallel.hpp"

namespace kap {

// ---------------------------------------------------------------------------
// BGK penalty P(f) = beta (M[f] - f)

/// beta(U) = nu * lambda0 * rho. lambda0 is the collision-frequency scale of the
/// kernel (1 for Maxwell molecules with C_gamma = 1/(2 pi)).
struct PenaltyConfig {
  double nu = 1.0;
  double lambda0 = 1.0;

  double beta(const Conserved& u) const { return nu * lambda0 * u.rho; }
};

inline void bgk_apply_cell(std::span<const double> f, const Conserved& u, double beta,
                           const VelocityGrid& g, std::span<double> out) {
  maxwellian_cell(u, g, out);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = beta * (out[i] - f[i]);
}

inline Distribution bgk_apply(const Distribution& f, const MacroState& U, const PenaltyConfig& cfg,
                              const VelocityGrid& g) {
  if (static_cast<int>(U.size()) != f.n_x() || f.n_v() != g.n())
    throw Error(ErrorKind::GridMismatch, "bgk_apply shape");
  Distribution out(f.n_x(), f.n_v());
  for (int i = 0; i < f.n_x(); ++i) bgk_apply_cell(f.cell(i), U[i], cfg.beta(U[i]), g, out.cell(i));
  return out;
}

/// Closed-form solve of f' = rhs + (beta dt/eps)(M_next - f') on one cell.
inline void bgk_implicit_solve_cell(std::span<const double> rhs, std::span<const double> m_next,
                                    double beta, double eps, double dt, std::span<double> out) {
  const double denom = eps + beta * dt;
  const double a = eps / denom, b = beta * dt / denom;
  for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = a * rhs[i] + b * m_next[i];
}

inline Distribution bgk_implicit_solve(const Distribution& rhs, const Distribution& m_next,
                                       std::span<const double> beta, std::span<const double> eps,
                                       double dt) {
  if (!rhs.same_shape(m_next) || beta.size() != static_cast<std::size_t>(rhs.n_x()) ||
      eps.size() != beta.size())
    throw Error(ErrorKind::GridMismatch, "bgk_implicit_solve shape");
  Distribution out(rhs.n_x(), rhs.n_v());
  for (int i = 0; i < rhs.n_x(); ++i)
    bgk_implicit_solve_cell(rhs.cell(i), m_next.cell(i), beta[i], eps[i], dt, out.cell(i));
  return out;
}

// ---------------------------------------------------------------------------
// Spectral Boltzmann operator

/// Q^_k = sum_{l+m=k} [beta(l,m) - beta(m,m)] f^_l f^_m over the truncated mode
/// set, evaluated per spatial cell.
///
/// The gain sum visits each unordered pair {l, m} once (beta is symmetric) and
/// only half the output modes (Q^_{-k} = conj Q^_k for real f). The loss sum is
/// the truncated convolution of f^ with beta(m,m) f^_m, done as a product on a
/// grid padded to 2 n_v so no aliased mode reaches the retained set.
///
/// The lattice modes with a component at +-n_v/2 lie outside the symmetric
/// retained set. They enter the loss convolution split evenly between +n_v/2
/// and -n_v/2 and receive the loss term only, so they relax instead of being
/// invisible to the operator. Immutable after construction; apply() is
/// thread-safe.
class SpectralCollision {
 public:
  explicit SpectralCollision(std::shared_ptr<const KernelModes> modes)
      : modes_(std::move(modes)), n_(modes_->n_v()), pad_(2 * n_) {
    build_gain_rows();
    build_nyquist();
    const int h = modes_->half_range();
    loss_weight_.resize(modes_->mode_count());
    for (int m1 = -h; m1 <= h; ++m1)
      for (int m2 = -h; m2 <= h; ++m2)
        loss_weight_[modes_->mode_index(m1, m2)] = (*modes_)(m1, m2, m1, m2);

    FftBuffer a(pad_ * pad_), b(pad_ * pad_);
    std::lock_guard lock(planner_mutex());
    fftw_complex* pa = a.fftw();
    fftw_complex* pb = b.fftw();
    const unsigned flags = FFTW_ESTIMATE;
    forward_ = fftw_plan_dft_2d(n_, n_, pa, pb, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_2d(n_, n_, pa, pb, FFTW_BACKWARD, flags);
    pad_forward_ = fftw_plan_dft_2d(pad_, pad_, pa, pb, FFTW_FORWARD, flags);
    pad_backward_ = fftw_plan_dft_2d(pad_, pad_, pa, pb, FFTW_BACKWARD, flags);
  }

  SpectralCollision(const SpectralCollision&) = delete;
  SpectralCollision& operator=(const SpectralCollision&) = delete;

  ~SpectralCollision() {
    std::lock_guard lock(planner_mutex());
    for (auto p : {forward_, backward_, pad_forward_, pad_backward_}) fftw_destroy_plan(p);
  }

  const KernelModes& modes() const { return *modes_; }

  void apply_cell(std::span<const double> f, std::span<double> q) const {
    using cplx = std::complex<double>;
    const int h = modes_->half_range();
    const int count = modes_->mode_count();
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    const double inv_nn = 1.0 / static_cast<double>(nn);

    FftBuffer buf(pad_ * pad_), spec(pad_ * pad_);
    for (std::size_t i = 0; i < nn; ++i) buf[i] = f[i];
    fftw_execute_dft(forward_, buf.fftw(), spec.fftw());

    // fh[index(k)] = f^_k, and reversed: rev[index(k)] = f^_{-k}.
    std::vector<double> fr(count), fi(count), rr(count), ri(count);
    for (int k1 = -h; k1 <= h; ++k1)
      for (int k2 = -h; k2 <= h; ++k2) {
        const cplx v = spec[wrap(k1, n_) * n_ + wrap(k2, n_)] * inv_nn;
        const int idx = modes_->mode_index(k1, k2);
        fr[idx] = v.real();
        fi[idx] = v.imag();
        rr[count - 1 - idx] = v.real();
        ri[count - 1 - idx] = v.imag();
      }

    std::vector<cplx> nyq(nyquist_.size());
    for (std::size_t a = 0; a < nyquist_.size(); ++a) nyq[a] = spec[nyquist_[a].lattice] * inv_nn;

    std::vector<cplx> qhat(count);
    const double* w = gain_weights_.data();
    for (const auto& out : outputs_) {
      double acc_r = 0.0, acc_i = 0.0;
      for (int r = out.row_begin; r < out.row_end; ++r) {
        const GainRow& row = rows_[r];
        const double* a_r = &rr[row.l_offset];
        const double* a_i = &ri[row.l_offset];
        const double* b_r = &fr[row.m_offset];
        const double* b_i = &fi[row.m_offset];
#pragma omp simd reduction(+ : acc_r, acc_i)
        for (int t = 0; t < row.len; ++t) {
          acc_r += w[t] * (a_r[t] * b_r[t] - a_i[t] * b_i[t]);
          acc_i += w[t] * (a_r[t] * b_i[t] + a_i[t] * b_r[t]);
        }
        w += row.len;
      }
      qhat[out.index] = {acc_r, acc_i};
    }

    // Loss: truncated convolution of f^ with beta(m,m) f^_m.
    FftBuffer lhs(pad_ * pad_), rhs(pad_ * pad_);
    buf.zero();
    spec.zero();
    for (int k1 = -h; k1 <= h; ++k1)
      for (int k2 = -h; k2 <= h; ++k2) {
        const int idx = modes_->mode_index(k1, k2);
        const std::size_t at = wrap(k1, pad_) * pad_ + wrap(k2, pad_);
        buf[at] = {fr[idx], fi[idx]};
        spec[at] = loss_weight_[idx] * cplx{fr[idx], fi[idx]};
      }
    for (std::size_t a = 0; a < nyquist_.size(); ++a) {
      const auto& al = nyquist_[a];
      for (int c = 0; c < al.count; ++c) buf[al.pad[c]] = nyq[a] / static_cast<double>(al.count);
    }
    fftw_execute_dft(pad_backward_, buf.fftw(), lhs.fftw());
    fftw_execute_dft(pad_backward_, spec.fftw(), rhs.fftw());
    for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] *= rhs[i];
    fftw_execute_dft(pad_forward_, lhs.fftw(), rhs.fftw());
    const double inv_pad = 1.0 / static_cast<double>(pad_ * pad_);

    spec.zero();
    for (const auto& out : outputs_) {
      const int k1 = out.k1, k2 = out.k2;
      const cplx val = qhat[out.index] - rhs[wrap(k1, pad_) * pad_ + wrap(k2, pad_)] * inv_pad;
      spec[wrap(k1, n_) * n_ + wrap(k2, n_)] = val;
      if (k1 != 0 || k2 != 0) spec[wrap(-k1, n_) * n_ + wrap(-k2, n_)] = std::conj(val);
    }
    for (const auto& al : nyquist_) {
      cplx sum = 0.0;
      for (int c = 0; c < al.count; ++c) sum += rhs[al.pad[c]];
      spec[al.lattice] = -sum * inv_pad;
    }
    fftw_execute_dft(backward_, spec.fftw(), buf.fftw());

    double imag_max = 0.0, real_max = 0.0, f_max = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      q[i] = buf[i].real();
      imag_max = std::max(imag_max, std::abs(buf[i].imag()));
      real_max = std::max(real_max, std::abs(q[i]));
      f_max = std::max(f_max, std::abs(f[i]));
    }
    if (imag_max > 1e-10 * std::max(f_max, real_max)) {
      std::ostringstream os;
      os << "spectral collision left an imaginary residue " << imag_max;
      throw Error(ErrorKind::SolveFailure, os.str());
    }
  }

  Distribution apply(const Distribution& f) const {
    if (f.n_v() != n_) throw Error(ErrorKind::GridMismatch, "distribution does not match kernel modes");
    Distribution out(f.n_x(), n_);
    parallel_for(static_cast<std::size_t>(f.n_x()), [&](std::size_t i) {
      apply_cell(f.cell(static_cast<int>(i)), out.cell(static_cast<int>(i)));
    });
    return out;
  }

 private:
  // Contiguous run of m = (m1, m2_lo .. m2_lo+len-1) for one output mode; the
  // partner l = k - m is read from the reversed array, also contiguously.
  struct GainRow {
    int l_offset, m_offset, len;
  };
  struct Output {
    int k1, k2, index, row_begin, row_end;
  };
  // A lattice mode with a +-n/2 component and its images on the padded grid.
  struct NyquistMode {
    std::size_t lattice;
    std::array<std::size_t, 4> pad;
    int count;
  };

  static int wrap(int k, int n) { return k < 0 ? k + n : k; }
  static int floor_half(int x) { return x >= 0 ? x / 2 : -((-x + 1) / 2); }
  // SIMD-aligned scratch so the plans made without FFTW_UNALIGNED apply.
  class FftBuffer {
   public:
    explicit FftBuffer(std::size_t n) : n_(n), data_(fftw_alloc_complex(n)) {
      if (!data_) throw std::bad_alloc();
      zero();
    }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;
    ~FftBuffer() { fftw_free(data_); }

    std::complex<double>& operator[](std::size_t i) {
      return reinterpret_cast<std::complex<double>*>(data_)[i];
    }
    std::size_t size() const { return n_; }
    void zero() { std::fill_n(reinterpret_cast<double*>(data_), 2 * n_, 0.0); }
    fftw_complex* fftw() { return data_; }

   private:
    std::size_t n_;
    fftw_complex* data_;
  };

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  void add_row(int k1, int k2, int m1, int m2_lo, int m2_hi, double factor) {
    if (m2_hi < m2_lo) return;
    const int count = modes_->mode_count();
    const int m_index = modes_->mode_index(m1, m2_lo);
    // rev[count-1-index(l)] = f^_l with l = k - m; index(-l) = count-1-index(l).
    const int l_offset = modes_->mode_index(m1 - k1, m2_lo - k2);
    if (l_offset < 0 || l_offset >= count) throw Error(ErrorKind::GridMismatch, "gain row layout");
    rows_.push_back({l_offset, m_index, m2_hi - m2_lo + 1});
    for (int m2 = m2_lo; m2 <= m2_hi; ++m2)
      gain_weights_.push_back(factor * (*modes_)(k1 - m1, k2 - m2, m1, m2));
  }

  void build_gain_rows() {
    const int h = modes_->half_range();
    for (int k1 = 0; k1 <= h; ++k1)
      for (int k2 = -h; k2 <= h; ++k2) {
        if (k1 == 0 && k2 < 0) continue;
        Output out{k1, k2, modes_->mode_index(k1, k2), static_cast<int>(rows_.size()), 0};
        const int m1_lo = std::max(-h, k1 - h), m1_hi = std::min(h, k1 + h);
        const int m2_lo = std::max(-h, k2 - h), m2_hi = std::min(h, k2 + h);
        // Unordered pairs: m strictly before l = k - m in (m1, m2) order, doubled.
        for (int m1 = m1_lo; m1 <= std::min(m1_hi, floor_half(k1 - 1)); ++m1)
          add_row(k1, k2, m1, m2_lo, m2_hi, 2.0);
        if (k1 % 2 == 0) {
          const int m1 = k1 / 2;
          add_row(k1, k2, m1, m2_lo, std::min(m2_hi, floor_half(k2 - 1)), 2.0);
          if (k2 % 2 == 0) add_row(k1, k2, m1, k2 / 2, k2 / 2, 1.0);
        }
        out.row_end = static_cast<int>(rows_.size());
        outputs_.push_back(out);
      }
  }

  void build_nyquist() {
    const int half = n_ / 2;
    auto images = [&](int a) {
      const int k = a < half ? a : a - n_;
      return k == -half ? std::vector<int>{half, -half} : std::vector<int>{k};
    };
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) {
        if (a != half && b != half) continue;
        NyquistMode m{static_cast<std::size_t>(a) * n_ + b, {}, 0};
        for (int p : images(a))
          for (int q : images(b)) m.pad[m.count++] = wrap(p, pad_) * pad_ + wrap(q, pad_);
        nyquist_.push_back(m);
      }
  }

  std::shared_ptr<const KernelModes> modes_;
  int n_;
  int pad_;
  std::vector<Output> outputs_;
  std::vector<GainRow> rows_;
  std::vector<double> gain_weights_;
  std::vector<double> loss_weight_;
  std::vector<NyquistMode> nyquist_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  fftw_plan pad_forward_ = nullptr;
  fftw_plan pad_backward_ = nullptr;
};

inline Distribution boltzmann_spectral(const Distribution& f, const SpectralCollision& op) {
  return op.apply(f);
}

// ---------------------------------------------------------------------------
// Collision model used by the kinetic solvers

enum class CollisionKind { Boltzmann, Bgk };

inline std::string to_string(CollisionKind k) { return k == CollisionKind::Boltzmann ? "boltzmann" : "bgk"; }

inline CollisionKind collision_kind_from_string(const std::string& s) {
  if (s == "boltzmann") return CollisionKind::Boltzmann;
  if (s == "bgk") return CollisionKind::Bgk;
  throw Error(ErrorKind::ConfigError, "unknown collision kind '" + s + "'");
}

struct CollisionOptions {
  /// Evaluate Q(f) - Q(M[f]) so the lattice equilibrium is an exact zero of Q.
  bool well_balanced = true;
  /// Remove the lattice moments of Q with a Maxwellian-weighted (1, v, |v|^2) correction.
  bool conservative = true;
  /// Equilibria (penalty target and well-balancing) match the lattice moments exactly.
  bool discrete_equilibrium = true;
};

/// Subtracts (a + b.v + c|v|^2/2) m from q so that q has zero lattice moments.
inline void remove_moments(std::span<double> q, std::span<const double> m, const VelocityGrid& g) {
  const int n = g.n();
  Eigen::Matrix4d gram = Eigen::Matrix4d::Zero();
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double vx = g.node(j), vy = g.node(k);
      const Eigen::Vector4d phi(1.0, vx, vy, 0.5 * (vx * vx + vy * vy));
      gram += m[static_cast<std::size_t>(j) * n + k] * (phi * phi.transpose());
    }
  const Conserved r = moment_sums(q, g);
  const Eigen::Vector4d c =
      (g.weight() * gram).partialPivLu().solve(Eigen::Vector4d(r.rho, r.mx, r.my, r.energy));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double vx = g.node(j), vy = g.node(k);
      const std::size_t at = static_cast<std::size_t>(j) * n + k;
      q[at] -= (c[0] + c[1] * vx + c[2] * vy + c[3] * 0.5 * (vx * vx + vy * vy)) * m[at];
    }
}

/// Q(f) on a velocity lattice: the spectral Boltzmann operator or a BGK
/// relaxation lambda0 rho (M - f), with the options above.
class CollisionModel {
 public:
  CollisionModel(const VelocityGrid& g, std::shared_ptr<const SpectralCollision> spectral,
                 CollisionOptions opt = {}, double lambda0 = 1.0)
      : grid_(g), kind_(CollisionKind::Boltzmann), spectral_(std::move(spectral)), opt_(opt),
        lambda0_(lambda0) {
    if (!spectral_ || !spectral_->modes().compatible(g))
      throw Error(ErrorKind::GridMismatch, "kernel modes do not match the velocity grid");
  }

  static CollisionModel bgk(const VelocityGrid& g, CollisionOptions opt = {}, double lambda0 = 1.0) {
    return CollisionModel(g, opt, lambda0);
  }

  const VelocityGrid& grid() const { return grid_; }
  CollisionKind kind() const { return kind_; }
  const CollisionOptions& options() const { return opt_; }

  void equilibrium_cell(const Conserved& u, std::span<double> out) const {
    if (opt_.discrete_equilibrium)
      discrete_maxwellian_cell(u, grid_, out);
    else
      maxwellian_cell(u, grid_, out);
  }

  Distribution equilibrium(const MacroState& U) const {
    Distribution m(static_cast<int>(U.size()), grid_.n());
    for (std::size_t i = 0; i < U.size(); ++i) equilibrium_cell(U[i], m.cell(static_cast<int>(i)));
    return m;
  }

  /// Q on one cell; u = moments of f and m = equilibrium_cell(u).
  void apply_cell(std::span<const double> f, const Conserved& u, std::span<const double> m,
                  std::span<double> out) const {
    if (kind_ == CollisionKind::Bgk) {
      const double rate = lambda0_ * u.rho;
      for (std::size_t i = 0; i < f.size(); ++i) out[i] = rate * (m[i] - f[i]);
      if (!opt_.discrete_equilibrium && opt_.conservative) remove_moments(out, m, grid_);
      return;
    }
    spectral_->apply_cell(f, out);
    if (opt_.well_balanced) {
      std::vector<double> qm(out.size());
      spectral_->apply_cell(m, qm);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= qm[i];
    }
    if (opt_.conservative) remove_moments(out, m, grid_);
  }

  /// Q over all cells given the per-cell moments and equilibria.
  Distribution apply(const Distribution& f, const MacroState& U, const Distribution& m) const {
    if (f.n_v() != grid_.n() || !f.same_shape(m) || static_cast<int>(U.size()) != f.n_x())
      throw Error(ErrorKind::GridMismatch, "collision model shapes");
    Distribution out(f.n_x(), f.n_v());
    parallel_for(static_cast<std::size_t>(f.n_x()), [&](std::size_t i) {
      const int c = static_cast<int>(i);
      apply_cell(f.cell(c), U[i], m.cell(c), out.cell(c));
    });
    return out;
  }

 private:
  CollisionModel(const VelocityGrid& g, CollisionOptions opt, double lambda0)
      : grid_(g), kind_(CollisionKind::Bgk), opt_(opt), lambda0_(lambda0) {}

  VelocityGrid grid_;
  CollisionKind kind_;
  std::shared_ptr<const SpectralCollision> spectral_;
  CollisionOptions opt_;
  double lambda0_;
};

}  // namespace kap

#endif  // KAP_COLLISION_HPP
