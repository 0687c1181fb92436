#ifndef KAP_EXPERIMENT_HPP
#define KAP_EXPERIMENT_HPP

// Experiment configuration and drivers shared by the CLI and the acceptance
// suite. A config is a flat INI file; every key has a per-experiment default so
// an empty file (or none) reproduces the reference setup.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "kap/ap_solver.hpp"
#include "kap/fokker_planck.hpp"
#include "kap/io.hpp"
#include "kap/kernel_modes.hpp"
#include "kap/macro_ref.hpp"
#include "kap/stiff_ode.hpp"

namespace kap {

inline constexpr const char* kVersion = "1.0.0";

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"linear_ode", "smooth_accuracy", "sod", "mixing", "porous_medium"};
  return names;
}

struct ExperimentConfig {
  std::string experiment = "sod";
  // imex1, imex2, explicit_rk2, explicit_euler; sod also accepts the macroscopic
  // references euler and navier_stokes.
  std::string scheme = "imex2";

  std::vector<int> n_x{100};
  int n_v = 32;
  double v_max = 7.0;
  double x_left = 0.0, x_right = 1.0;
  Boundary bc = Boundary::SpecularReflection;

  double eps = 1e-2;
  std::vector<double> eps_list;  // convergence sweeps; empty means {eps}
  std::string eps_field = "constant";
  std::string collision = "boltzmann";
  bool well_balanced = true, conservative = true, discrete_equilibrium = true;
  double nu = 2.0, lambda0 = 1.0;
  double gamma = 0.0, c_gamma = 1.0 / (2.0 * std::numbers::pi);
  int quadrature_n = 64;
  std::string kernel_cache;

  double cfl = 0.9;
  double dt = 0.0;  // fixed step when positive
  double t_end = 0.2;
  std::vector<double> output_times{0.05, 0.1, 0.15, 0.2};
  int series_every = 1;

  double m = 3.0;  // porous-medium exponent

  std::string out_dir = "out";
  unsigned seed = 0;  // reserved

  std::vector<double> epsilons() const { return eps_list.empty() ? std::vector<double>{eps} : eps_list; }
};

namespace detail {

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

template <class T>
std::vector<T> split(const std::string& s, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    is >> v;
    if (!is || !is.eof()) throw Error(ErrorKind::ConfigError, "bad list entry '" + item + "' for " + key);
    out.push_back(v);
  }
  return out;
}

/// Value at `key` or `fallback` when absent; a present value must parse fully.
template <class T>
T get_strict(const boost::property_tree::ptree& pt, const std::string& key, const T& fallback) {
  const auto raw = pt.get_optional<std::string>(key);
  if (!raw) return fallback;
  std::string text = *raw;
  text.erase(0, text.find_first_not_of(" \t"));
  text.erase(text.find_last_not_of(" \t") + 1);
  std::istringstream is(text);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    is.setstate(std::ios::failbit);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else {
    is >> v;
  }
  if (!is || !is.eof()) throw Error(ErrorKind::ConfigError, "bad value '" + text + "' for " + key);
  return v;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

inline ExperimentConfig default_config(const std::string& name) {
  ExperimentConfig c;
  c.experiment = name;
  c.out_dir = "out/" + name;
  if (name == "linear_ode") {
    c.scheme = "imex2";
    c.dt = 0.3;
    c.nu = 2.0;
    c.t_end = 30.0;
    c.output_times = {30.0};
  } else if (name == "smooth_accuracy") {
    c.n_x = {32, 64, 128};
    c.n_v = 16;
    c.x_left = -1.0;
    c.x_right = 1.0;
    c.eps_list = {1.0, 1e-2, 1e-5};
    c.eps = 1e-5;
    c.t_end = 0.25;
    c.output_times = {0.05, 0.1, 0.15, 0.2, 0.25};
  } else if (name == "sod") {
    // the class defaults
  } else if (name == "mixing") {
    c.n_x = {200};
    c.n_v = 16;
    c.v_max = 4.0;
    c.x_left = -0.5;
    c.x_right = 0.5;
    c.bc = Boundary::Periodic;
    c.eps = 1e-3;
    c.eps_field = "mixing";
    c.t_end = 0.75;
    c.output_times = {0.25, 0.5, 0.75};
  } else if (name == "porous_medium") {
    c.scheme = "imex1";
    c.n_x = {1};
    c.n_v = 64;
    c.v_max = 3.0;
    c.dt = 0.02;
    c.t_end = 4.0;
    c.output_times = {0.1, 0.4, 0.8, 1.0, 1.2, 4.0};
  } else {
    throw Error(ErrorKind::ConfigError, "unknown experiment '" + name + "'");
  }
  return c;
}

inline boost::property_tree::ptree to_ptree(const ExperimentConfig& c) {
  boost::property_tree::ptree pt;
  using detail::fmt;
  pt.put("experiment.name", c.experiment);
  pt.put("experiment.scheme", c.scheme);
  pt.put("grid.n_x", detail::join(c.n_x));
  pt.put("grid.n_v", c.n_v);
  pt.put("grid.v_max", fmt(c.v_max));
  pt.put("grid.x_left", fmt(c.x_left));
  pt.put("grid.x_right", fmt(c.x_right));
  pt.put("grid.bc", to_string(c.bc));
  pt.put("physics.eps", fmt(c.eps));
  pt.put("physics.eps_list", detail::join(c.eps_list));
  pt.put("physics.eps_field", c.eps_field);
  pt.put("physics.collision", c.collision);
  pt.put("physics.well_balanced", c.well_balanced);
  pt.put("physics.conservative", c.conservative);
  pt.put("physics.discrete_equilibrium", c.discrete_equilibrium);
  pt.put("physics.nu", fmt(c.nu));
  pt.put("physics.lambda0", fmt(c.lambda0));
  pt.put("physics.m", fmt(c.m));
  pt.put("kernel.gamma", fmt(c.gamma));
  pt.put("kernel.c_gamma", fmt(c.c_gamma));
  pt.put("kernel.quadrature_n", c.quadrature_n);
  pt.put("kernel.cache_dir", c.kernel_cache);
  pt.put("time.cfl", fmt(c.cfl));
  pt.put("time.dt", fmt(c.dt));
  pt.put("time.t_end", fmt(c.t_end));
  pt.put("time.output_times", detail::join(c.output_times));
  pt.put("time.series_every", c.series_every);
  pt.put("run.out_dir", c.out_dir);
  pt.put("run.seed", c.seed);
  return pt;
}

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
  if (std::find(experiment_names().begin(), experiment_names().end(), c.experiment) == experiment_names().end())
    fail("unknown experiment '" + c.experiment + "'");
  const bool macro = c.scheme == "euler" || c.scheme == "navier_stokes";
  if (macro && c.experiment != "sod") fail("macroscopic reference schemes apply to sod only");
  if (!macro) scheme_from_string(c.scheme);
  if (c.n_x.empty()) fail("n_x list is empty");
  for (int n : c.n_x)
    if (n <= 0) fail("n_x must be positive");
  if (c.n_v < 4 || c.n_v % 2) fail("n_v must be even and at least 4");
  if (!(c.v_max > 0.0)) fail("v_max must be positive");
  if (!(c.x_right > c.x_left)) fail("x_right must exceed x_left");
  for (double e : c.epsilons())
    if (!(e > 0.0)) fail("eps must be positive");
  if (c.eps_field != "constant" && c.eps_field != "mixing") fail("eps_field must be constant or mixing");
  collision_kind_from_string(c.collision);
  if (!(c.nu > 0.0) || !(c.lambda0 > 0.0)) fail("nu and lambda0 must be positive");
  if (!(c.cfl > 0.0) || c.cfl > 1.0) fail("cfl must lie in (0, 1]");
  if (c.dt < 0.0) fail("dt must be nonnegative");
  if (!(c.t_end > 0.0)) fail("t_end must be positive");
  if (c.quadrature_n < 8) fail("quadrature_n must be at least 8");
  if (c.series_every < 1) fail("series_every must be at least 1");
  if (!(c.m > 1.0)) fail("m must exceed 1");
  for (double t : c.output_times)
    if (!(t > 0.0) || t > c.t_end * (1 + 1e-12)) fail("output times must lie in (0, t_end]");
  if (c.experiment == "porous_medium" && !(c.dt > 0.0)) fail("porous_medium needs a fixed dt");
  if (c.experiment == "linear_ode" && !(c.dt > 0.0)) fail("linear_ode needs a fixed dt");
}

/// Reads a config from a property tree; keys not in `pt` keep the defaults of
/// the named experiment. Unknown keys are rejected.
inline ExperimentConfig from_ptree(const boost::property_tree::ptree& pt) {
  const std::string name = pt.get<std::string>("experiment.name", "sod");
  ExperimentConfig c = default_config(name);
  const auto known = to_ptree(c);
  for (const auto& [section, body] : pt)
    for (const auto& [key, value] : body) {
      (void)value;
      if (!known.get_child_optional(section + "." + key))
        throw Error(ErrorKind::ConfigError, "unknown key " + section + "." + key);
    }
  using detail::get_strict;
  auto str = [&](const char* k, const std::string& d) { return get_strict<std::string>(pt, k, d); };
  auto num = [&](const char* k, double d) { return get_strict<double>(pt, k, d); };
  c.scheme = str("experiment.scheme", c.scheme);
  c.n_x = detail::split<int>(str("grid.n_x", detail::join(c.n_x)), "grid.n_x");
  c.n_v = get_strict<int>(pt, "grid.n_v", c.n_v);
  c.v_max = num("grid.v_max", c.v_max);
  c.x_left = num("grid.x_left", c.x_left);
  c.x_right = num("grid.x_right", c.x_right);
  c.bc = boundary_from_string(str("grid.bc", to_string(c.bc)));
  c.eps = num("physics.eps", c.eps);
  c.eps_list = detail::split<double>(str("physics.eps_list", detail::join(c.eps_list)), "physics.eps_list");
  c.eps_field = str("physics.eps_field", c.eps_field);
  c.collision = str("physics.collision", c.collision);
  c.well_balanced = get_strict<bool>(pt, "physics.well_balanced", c.well_balanced);
  c.conservative = get_strict<bool>(pt, "physics.conservative", c.conservative);
  c.discrete_equilibrium = get_strict<bool>(pt, "physics.discrete_equilibrium", c.discrete_equilibrium);
  c.nu = num("physics.nu", c.nu);
  c.lambda0 = num("physics.lambda0", c.lambda0);
  c.m = num("physics.m", c.m);
  c.gamma = num("kernel.gamma", c.gamma);
  c.c_gamma = num("kernel.c_gamma", c.c_gamma);
  c.quadrature_n = get_strict<int>(pt, "kernel.quadrature_n", c.quadrature_n);
  c.kernel_cache = str("kernel.cache_dir", c.kernel_cache);
  c.cfl = num("time.cfl", c.cfl);
  c.dt = num("time.dt", c.dt);
  c.t_end = num("time.t_end", c.t_end);
  c.output_times =
      detail::split<double>(str("time.output_times", detail::join(c.output_times)), "time.output_times");
  c.series_every = get_strict<int>(pt, "time.series_every", c.series_every);
  c.out_dir = str("run.out_dir", c.out_dir);
  c.seed = get_strict<unsigned>(pt, "run.seed", c.seed);
  if (c.output_times.empty()) c.output_times = {c.t_end};
  validate(c);
  return c;
}

inline boost::property_tree::ptree read_ini(const std::filesystem::path& file) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(file.string(), pt);
  } catch (const boost::property_tree::ptree_error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return pt;
}

inline void write_ini(const std::filesystem::path& file, const ExperimentConfig& c) {
  boost::property_tree::write_ini(file.string(), to_ptree(c));
}

// ---------------------------------------------------------------------------
// Kinetic runs

inline KernelParams kernel_params(const ExperimentConfig& c) {
  return {c.n_v, c.v_max, c.gamma, c.c_gamma, c.quadrature_n};
}

inline std::shared_ptr<const CollisionModel> make_collision(const ExperimentConfig& c) {
  const VelocityGrid g(c.n_v, c.v_max);
  const CollisionOptions opt{c.well_balanced, c.conservative, c.discrete_equilibrium};
  if (collision_kind_from_string(c.collision) == CollisionKind::Bgk)
    return std::make_shared<const CollisionModel>(CollisionModel::bgk(g, opt, c.lambda0));
  auto km = load_or_compute(kernel_params(c), c.kernel_cache);
  return std::make_shared<const CollisionModel>(g, std::make_shared<const SpectralCollision>(km), opt, c.lambda0);
}

inline KineticSolver make_solver(const ExperimentConfig& c, int n_x, double eps,
                                 std::shared_ptr<const CollisionModel> collision) {
  SpatialMesh mesh(n_x, c.x_left, c.x_right, c.bc);
  auto field = c.eps_field == "mixing" ? KnudsenField::mixing(mesh, eps) : KnudsenField::constant(mesh, eps);
  return KineticSolver(mesh, VelocityGrid(c.n_v, c.v_max), std::move(field), PenaltyConfig{c.nu, c.lambda0},
                       std::move(collision));
}

inline Distribution initial_distribution(const ExperimentConfig& c, const KineticSolver& s) {
  if (c.experiment == "smooth_accuracy") return equilibrium_data(s, smooth_profile);
  if (c.experiment == "sod") return equilibrium_data(s, sod_profile);
  if (c.experiment == "mixing") return mixing_data(s.mesh(), s.vgrid(), 0.5 * (c.x_right - c.x_left));
  throw Error(ErrorKind::ConfigError, c.experiment + " is not a kinetic experiment");
}

struct KineticRunStats {
  long steps = 0;
  double max_global_distance = 0.0;  // per-step ||f - M(f)||_1 / ||f||_1, when tracked
  double max_conservation_drift = 0.0;  // per-step relative change of total (rho, m, E)
};

struct KineticRunOptions {
  bool track_equilibrium = false;
  bool track_conservation = false;
};

/// Steps from the initial state through every output time, which are hit
/// exactly by shortening the CFL step. `observe` sees the state at each output.
inline KineticRunStats run_kinetic(const ExperimentConfig& c, const KineticSolver& solver, KineticState state,
                                   const std::function<void(const KineticState&)>& observe,
                                   KineticRunOptions opt = {}) {
  const Scheme scheme = scheme_from_string(c.scheme);
  const double dt_max = c.dt > 0.0 ? c.dt : solver.cfl_dt(c.cfl);
  std::vector<double> times = c.output_times;
  std::sort(times.begin(), times.end());
  KineticRunStats stats;
  auto totals = [&](const KineticState& s) {
    return total_moments(moments(s.f, solver.vgrid()), solver.mesh().dx());
  };
  Conserved before = opt.track_conservation ? totals(state) : Conserved{};
  for (double t_out : times) {
    const double span = t_out - state.t;
    if (span <= 0.0) continue;
    const long n = std::max(1L, std::lround(std::ceil(span / dt_max - 1e-9)));
    const double dt = span / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
      state = solver.step(scheme, state, dt);
      ++stats.steps;
      if (opt.track_equilibrium)
        stats.max_global_distance =
            std::max(stats.max_global_distance, global_distance(state.f, solver.equilibrium(state.f)));
      if (opt.track_conservation) {
        const Conserved after = totals(state);
        const Conserved d = after - before;
        const double drift = std::max({std::abs(d.rho) / std::abs(before.rho),
                                       std::hypot(d.mx, d.my) / std::max(std::abs(before.energy), 1e-300),
                                       std::abs(d.energy) / std::abs(before.energy)});
        stats.max_conservation_drift = std::max(stats.max_conservation_drift, drift);
        before = after;
      }
    }
    state.t = t_out;
    observe(state);
  }
  return stats;
}

/// Macroscopic Sod reference with the kinetic diagnostics layout; the heat flux
/// column holds the Fourier flux -rho T dT/dx for navier_stokes and 0 for euler.
inline std::vector<CellDiagnostics> macro_diagnostics(const MacroField& u, const SpatialMesh& mesh, bool viscous) {
  const auto q = fourier_heat_flux(u, mesh);
  std::vector<CellDiagnostics> out(u.size());
  for (int i = 0; i < mesh.n_x(); ++i)
    out[i] = {mesh.center(i), u[i].rho, u[i].ux(), u[i].uy(), u[i].temperature(), viscous ? q[i] : 0.0, 0.0};
  return out;
}

inline void run_macro_reference(const ExperimentConfig& c, int n_x, double eps,
                                const std::function<void(double, const MacroField&, const SpatialMesh&)>& observe) {
  const SpatialMesh mesh(n_x, c.x_left, c.x_right, c.bc);
  const double visc = c.scheme == "navier_stokes" ? eps : 0.0;
  MacroField u(n_x);
  for (int i = 0; i < n_x; ++i) u[i] = sod_profile(mesh.center(i));
  std::vector<double> times = c.output_times;
  std::sort(times.begin(), times.end());
  double t = 0.0;
  for (double t_out : times) {
    u = run_macro(u, mesh, t_out - t, visc, c.cfl);
    t = t_out;
    observe(t, u, mesh);
  }
}

// ---------------------------------------------------------------------------
// Self-convergence

/// max over output times of ||R f_h - f_2h||_p / ||f_0||_p, R averaging fine
/// cell pairs onto the coarse mesh. p is 1 or infinity (any p <= 0).
inline double self_convergence(const std::vector<Distribution>& fine, const std::vector<Distribution>& coarse,
                               const Distribution& f0_coarse, double p) {
  if (fine.size() != coarse.size() || fine.empty()) throw Error(ErrorKind::GridIncompatible, "output count");
  double worst = 0.0;
  for (std::size_t n = 0; n < fine.size(); ++n) {
    if (fine[n].n_x() != 2 * coarse[n].n_x() || fine[n].n_v() != coarse[n].n_v())
      throw Error(ErrorKind::GridIncompatible, "fine mesh must have twice the coarse cells");
    const auto r = restrict_distribution(fine[n], 1);
    const auto d = relative_distance(r.values(), coarse[n].values(), f0_coarse.values());
    worst = std::max(worst, p > 0.0 ? d.l1 : d.linf);
  }
  return worst;
}

struct SlopeFit {
  double slope = 0.0, residual = 0.0;
};

/// Least-squares slope of log(err) against log(h); residual is the RMS misfit.
inline SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  if (n < 2 || err.size() != n) throw Error(ErrorKind::ConfigError, "slope fit needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double b = (sy - f.slope * sx) / n;
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::log(err[i]) - (f.slope * std::log(h[i]) + b);
    r += e * e;
  }
  f.residual = std::sqrt(r / n);
  return f;
}

struct ConvergenceRow {
  double eps;
  int n_x;  // finer mesh of the pair
  double l1, linf;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<double, SlopeFit>> slopes_l1, slopes_linf;  // per eps
};

/// Runs every mesh in c.n_x (ascending, successive factors of 2) for every eps
/// and measures the error of each mesh against the next coarser one.
inline ConvergenceReport convergence_study(const ExperimentConfig& c) {
  std::vector<int> grids = c.n_x;
  std::sort(grids.begin(), grids.end());
  if (grids.size() < 3) throw Error(ErrorKind::ConfigError, "convergence needs at least three meshes");
  for (std::size_t i = 1; i < grids.size(); ++i)
    if (grids[i] != 2 * grids[i - 1]) throw Error(ErrorKind::GridIncompatible, "meshes must double");
  const auto collision = make_collision(c);
  ConvergenceReport rep;
  for (double eps : c.epsilons()) {
    std::vector<std::vector<Distribution>> outputs;
    std::vector<Distribution> initial;
    for (int n : grids) {
      const auto solver = make_solver(c, n, eps, collision);
      KineticState s{initial_distribution(c, solver), 0.0};
      initial.push_back(s.f);
      std::vector<Distribution> out;
      run_kinetic(c, solver, s, [&](const KineticState& st) { out.push_back(st.f); });
      outputs.push_back(std::move(out));
    }
    std::vector<double> h, e1, em;
    for (std::size_t i = 1; i < grids.size(); ++i) {
      const double l1 = self_convergence(outputs[i], outputs[i - 1], initial[i - 1], 1.0);
      const double li = self_convergence(outputs[i], outputs[i - 1], initial[i - 1], 0.0);
      rep.rows.push_back({eps, grids[i], l1, li});
      h.push_back((c.x_right - c.x_left) / grids[i]);
      e1.push_back(l1);
      em.push_back(li);
    }
    rep.slopes_l1.emplace_back(eps, fit_slope(h, e1));
    rep.slopes_linf.emplace_back(eps, fit_slope(h, em));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Porous medium

struct PorousRecord {
  double t, mass, min_f, H, H_rel, dissipation, H_ct;
};

/// Carrillo-Toscani functional int |v|^2 f + 2/(m-1) f^m, the one dissipated
/// at the rate 2 D.
inline double entropy_ct(const std::vector<double>& f, const VelocityGrid& g, double m) {
  const int n = g.n();
  double h = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double v = f[static_cast<std::size_t>(j) * n + k];
      h += (g.node(j) * g.node(j) + g.node(k) * g.node(k)) * v + 2.0 / (m - 1.0) * std::pow(std::max(v, 0.0), m);
    }
  return g.weight() * h;
}

struct PorousRun {
  std::vector<PorousRecord> series;
  std::vector<std::pair<double, std::vector<double>>> snapshots;  // at output times
  std::vector<double> barenblatt;
  double initial_mass = 0.0;
  double C = 0.0;
};

inline PorousRun run_porous(const ExperimentConfig& c) {
  const VelocityGrid g(c.n_v, c.v_max);
  PorousState s{ring_data(g), 0.0};
  PorousRun run;
  run.initial_mass = porous_mass(s.f, g);
  const PorousSolver solver(g, c.m, run.initial_mass, c.dt);
  run.C = solver.C();
  run.barenblatt = barenblatt_profile(g, run.C, c.m);
  const double HM = entropy(run.barenblatt, g, c.m).H;
  auto record = [&](const PorousState& st) {
    const auto e = entropy(st.f, g, c.m);
    run.series.push_back({st.t, porous_mass(st.f, g), *std::min_element(st.f.begin(), st.f.end()), e.H, e.H - HM,
                          e.dissipation, entropy_ct(st.f, g, c.m)});
  };
  record(s);
  std::vector<double> times = c.output_times;
  std::sort(times.begin(), times.end());
  std::size_t next = 0;
  const long steps = std::lround(std::ceil(c.t_end / c.dt - 1e-9));
  for (long n = 1; n <= steps; ++n) {
    s = solver.step(s);
    s.t = n * c.dt;
    if (n % c.series_every == 0 || n == steps) record(s);
    while (next < times.size() && s.t >= times[next] - 1e-9 * c.dt) run.snapshots.emplace_back(times[next++], s.f);
  }
  return run;
}

inline Table porous_table(const std::vector<PorousRecord>& series) {
  Table t{{"t", "mass", "min_f", "H", "H_minus_H_M", "dissipation", "H_ct"}, {}};
  for (const auto& r : series) t.rows.push_back({r.t, r.mass, r.min_f, r.H, r.H_rel, r.dissipation, r.H_ct});
  return t;
}

}  // namespace kap

#endif  // KAP_EXPERIMENT_HPP
