// kap: runs the reference experiments, convergence studies and run comparisons.
//
// Exit codes: 0 success, 2 solver error, 3 config error, 4 comparison above
// tolerance.

#include <CLI11.hpp>
#include <fftw3.h>
#include <json.hpp>

#include <Eigen/Core>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kap/experiment.hpp"
#include "kap/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace kap;

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitConfig = 3;
constexpr int kExitCompare = 4;

// Failure that carries a record kind outside ErrorKind (the linear test's Overflow).
struct RunFailure {
  std::string kind, message;
};

struct Overrides {
  std::optional<std::string> scheme;
  std::optional<double> eps, dt, nu, t_end, cfl;
  std::optional<int> n_x, n_v;
  std::vector<std::string> set;
};

ExperimentConfig resolve(const std::string& experiment, const std::string& config_file, const Overrides& o,
                         const std::string& out) {
  boost::property_tree::ptree pt;
  if (!config_file.empty()) pt = read_ini(config_file);
  const auto named = pt.get_optional<std::string>("experiment.name");
  if (!experiment.empty()) {
    if (named && *named != experiment)
      throw Error(ErrorKind::ConfigError, "config is for '" + *named + "', not '" + experiment + "'");
    pt.put("experiment.name", experiment);
  } else if (!named) {
    throw Error(ErrorKind::ConfigError, "no experiment given");
  }
  auto put = [&](const char* key, const auto& v) {
    if (v) pt.put(key, detail::fmt(static_cast<double>(*v)));
  };
  if (o.scheme) pt.put("experiment.scheme", *o.scheme);
  put("physics.eps", o.eps);
  if (o.eps) pt.put("physics.eps_list", "");
  put("time.dt", o.dt);
  put("physics.nu", o.nu);
  put("time.cfl", o.cfl);
  if (o.n_x) pt.put("grid.n_x", std::to_string(*o.n_x));
  if (o.n_v) pt.put("grid.n_v", std::to_string(*o.n_v));
  if (o.t_end) {
    put("time.t_end", o.t_end);
    if (!pt.get_optional<std::string>("time.output_times")) pt.put("time.output_times", detail::fmt(*o.t_end));
  }
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || kv.find('.') > eq)
      throw Error(ErrorKind::ConfigError, "--set expects section.key=value, got '" + kv + "'");
    pt.put(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!out.empty()) pt.put("run.out_dir", out);
  auto c = from_ptree(pt);
  // A shortened run keeps only the output times it reaches.
  if (o.t_end) {
    std::erase_if(c.output_times, [&](double t) { return t > c.t_end * (1 + 1e-12); });
    if (c.output_times.empty() || c.output_times.back() < c.t_end) c.output_times.push_back(c.t_end);
  }
  return c;
}

json config_json(const ExperimentConfig& c) {
  json j;
  for (const auto& [section, body] : to_ptree(c))
    for (const auto& [key, value] : body) j[section][key] = value.data();
  return j;
}

json base_manifest(const ExperimentConfig& c) {
  json m;
  m["kap_version"] = kVersion;
  m["fftw_version"] = std::string(fftw_version);
  m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  m["threads"] = thread_count();
  m["config"] = config_json(c);
  if (c.experiment != "linear_ode" && c.experiment != "porous_medium" && c.collision == "boltzmann")
    m["kernel_cache_key"] = kernel_cache_key(kernel_params(c));
  return m;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream os(file);
  os << j.dump(2) << '\n';
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + file.string());
}

std::string time_tag(double t) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << t;
  return os.str();
}

void run_linear(const ExperimentConfig& c, const fs::path& out, json& manifest) {
  const auto tr = run_linear_test(c.nu, c.dt, c.t_end, scheme_from_string(c.scheme));
  std::ofstream os(out / "trajectory.csv");
  write_trajectory_csv(os, tr);
  manifest["outputs"] = {"trajectory.csv"};
  if (tr.overflow) {
    std::ostringstream msg;
    msg << "state norm exceeded " << kOverflowNorm << " at t = " << tr.overflow_time;
    throw RunFailure{"Overflow", msg.str()};
  }
  manifest["final_abs_f3"] = std::abs(tr.samples.back().f[2]);
}

void run_kinetic_experiment(const ExperimentConfig& c, const fs::path& out, json& manifest) {
  json runs = json::array();
  const bool macro = c.scheme == "euler" || c.scheme == "navier_stokes";
  std::shared_ptr<const CollisionModel> collision;
  if (!macro) collision = make_collision(c);
  for (int n_x : c.n_x) {
    const fs::path dir = c.n_x.size() > 1 ? out / ("nx" + std::to_string(n_x)) : out;
    fs::create_directories(dir);
    json r;
    r["n_x"] = n_x;
    r["outputs"] = json::array();
    if (macro) {
      run_macro_reference(c, n_x, c.eps, [&](double t, const MacroField& u, const SpatialMesh& mesh) {
        write_csv(dir / diagnostics_name(t), diagnostics_table(macro_diagnostics(u, mesh, c.scheme != "euler")));
        r["outputs"].push_back(diagnostics_name(t));
      });
    } else {
      const auto solver = make_solver(c, n_x, c.eps, collision);
      KineticState s{initial_distribution(c, solver), 0.0};
      write_csv(dir / diagnostics_name(0.0), diagnostics_table(diagnose(solver, s.f)));
      const auto stats = run_kinetic(
          c, solver, s,
          [&](const KineticState& st) {
            write_csv(dir / diagnostics_name(st.t), diagnostics_table(diagnose(solver, st.f)));
            r["outputs"].push_back(diagnostics_name(st.t));
            const std::string snap = "snapshot_t" + time_tag(st.t) + ".bin";
            write_snapshot(dir / snap, {c.x_left, c.x_right, c.v_max, st.t, st.f});
            r["outputs"].push_back(snap);
          },
          {true, true});
      r["steps"] = stats.steps;
      r["max_distance_to_equilibrium"] = stats.max_global_distance;
      r["max_conservation_drift"] = stats.max_conservation_drift;
    }
    runs.push_back(r);
  }
  manifest["runs"] = runs;
}

void run_porous_experiment(const ExperimentConfig& c, const fs::path& out, json& manifest) {
  const auto run = run_porous(c);
  write_csv(out / "series.csv", porous_table(run.series));
  const VelocityGrid g(c.n_v, c.v_max);
  json outputs = json::array({"series.csv"});
  json rescale = json::array();
  for (const auto& [t, f] : run.snapshots) {
    Distribution d(1, c.n_v);
    std::copy(f.begin(), f.end(), d.values().begin());
    const std::string name = "porous_t" + time_tag(t) + ".bin";
    write_snapshot(out / name, {0.0, 1.0, c.v_max, t, d});
    outputs.push_back(name);
    // The rescaled time t is log s(t_original) with s = sqrt(1 + 2 t_original).
    const double t_original = 0.5 * (std::exp(2.0 * t) - 1.0);
    const auto back = rescale_back(f, g, t_original);
    rescale.push_back({{"t", t}, {"t_original", t_original}, {"s", back.s}, {"mass_factor", back.mass_factor}});
  }
  double worst_increase = 0.0, mass_drift = 0.0, min_f = 0.0;
  for (std::size_t i = 1; i < run.series.size(); ++i) {
    if (i >= 2) worst_increase = std::max(worst_increase, run.series[i].H - run.series[i - 1].H);
    mass_drift = std::max(mass_drift, std::abs(run.series[i].mass - run.initial_mass) / run.initial_mass);
    min_f = std::min(min_f, run.series[i].min_f);
  }
  manifest["outputs"] = outputs;
  manifest["rescale"] = rescale;
  manifest["initial_mass"] = run.initial_mass;
  manifest["barenblatt_C"] = run.C;
  manifest["max_entropy_increase_after_step1"] = worst_increase;
  manifest["max_relative_mass_drift"] = mass_drift;
  manifest["min_f"] = min_f;
}

int cmd_run(const std::string& experiment, const std::string& config_file, const std::string& out_opt,
            const Overrides& o) {
  const auto c = resolve(experiment, config_file, o, out_opt);
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  write_ini(out / "resolved.ini", c);
  json manifest = base_manifest(c);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (c.experiment == "linear_ode")
      run_linear(c, out, manifest);
    else if (c.experiment == "porous_medium")
      run_porous_experiment(c, out, manifest);
    else
      run_kinetic_experiment(c, out, manifest);
  } catch (const RunFailure& f) {
    manifest["status"] = "error";
    write_json(out / "manifest.json", manifest);
    write_json(out / "error.json", {{"status", "error"}, {"kind", f.kind}, {"message", f.message}});
    std::cerr << f.kind << ": " << f.message << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    manifest["status"] = "error";
    write_json(out / "manifest.json", manifest);
    write_json(out / "error.json",
               {{"status", "error"}, {"kind", std::string(to_string(e.kind()))}, {"message", e.what()}});
    std::cerr << e.what() << '\n';
    return kExitSolver;
  }
  manifest["status"] = "ok";
  manifest["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(out / "manifest.json", manifest);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_convergence(const std::string& experiment, const std::string& config_file, const std::string& out_opt,
                    const std::vector<int>& grids, const std::vector<double>& eps, const Overrides& o) {
  auto c = resolve(experiment, config_file, o, out_opt);
  if (!grids.empty()) c.n_x = grids;
  if (!eps.empty()) c.eps_list = eps;
  validate(c);
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  write_ini(out / "resolved.ini", c);
  const auto rep = convergence_study(c);
  Table rows{{"eps", "n_x", "l1", "linf"}, {}};
  for (const auto& r : rep.rows) rows.rows.push_back({r.eps, static_cast<double>(r.n_x), r.l1, r.linf});
  write_csv(out / "convergence.csv", rows);
  Table slopes{{"eps", "slope_l1", "residual_l1", "slope_linf", "residual_linf"}, {}};
  for (std::size_t i = 0; i < rep.slopes_l1.size(); ++i)
    slopes.rows.push_back({rep.slopes_l1[i].first, rep.slopes_l1[i].second.slope, rep.slopes_l1[i].second.residual,
                           rep.slopes_linf[i].second.slope, rep.slopes_linf[i].second.residual});
  write_csv(out / "slopes.csv", slopes);
  json manifest = base_manifest(c);
  manifest["status"] = "ok";
  manifest["outputs"] = {"convergence.csv", "slopes.csv"};
  write_json(out / "manifest.json", manifest);
  std::printf("%-10s %6s %12s %12s\n", "eps", "n_x", "L1", "Linf");
  for (const auto& r : rep.rows) std::printf("%-10g %6d %12.4e %12.4e\n", r.eps, r.n_x, r.l1, r.linf);
  for (const auto& [e, s] : rep.slopes_l1) std::printf("eps %-8g L1 slope %.3f (fit residual %.2e)\n", e, s.slope, s.residual);
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, std::vector<std::string> fields,
                const std::string& norm, std::optional<double> tol) {
  for (auto& f : fields)
    if (f == "u") f = "u_x";
  if (norm != "l1" && norm != "linf") throw Error(ErrorKind::ConfigError, "norm must be l1 or linf");
  const auto d = compare_runs(a, b, fields);
  double worst = 0.0;
  std::printf("t,field,l1,linf\n");
  for (const auto& x : d) {
    std::printf("%.4f,%s,%.6e,%.6e\n", x.t, x.field.c_str(), x.norm.l1, x.norm.linf);
    worst = std::max(worst, norm == "l1" ? x.norm.l1 : x.norm.linf);
  }
  if (tol && worst > *tol) {
    std::fprintf(stderr, "max %s distance %.3e exceeds %.3e\n", norm.c_str(), worst, *tol);
    return kExitCompare;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized asymptotic-preserving kinetic solvers and reference experiments"};
  app.require_subcommand(1);

  std::string experiment, config_file, out;
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("experiment", experiment, "linear_ode, smooth_accuracy, sod, mixing or porous_medium");
    sub->add_option("--config", config_file, "INI file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--scheme", o.scheme, "imex1, imex2, explicit_rk2, explicit_euler (sod: euler, navier_stokes)");
    sub->add_option("--eps", o.eps, "Knudsen number (eps0 for mixing)");
    sub->add_option("--dt", o.dt, "fixed time step");
    sub->add_option("--cfl", o.cfl, "transport CFL factor");
    sub->add_option("--nu", o.nu, "penalty factor");
    sub->add_option("--nx", o.n_x, "number of cells");
    sub->add_option("--nv", o.n_v, "velocity nodes per dimension");
    sub->add_option("--t-end", o.t_end, "final time");
    sub->add_option("--set", o.set, "section.key=value override");
  };

  auto* run = app.add_subcommand("run", "run one experiment");
  add_common(run);

  auto* conv = app.add_subcommand("convergence", "self-convergence study on doubling meshes");
  add_common(conv);
  std::vector<int> grids;
  std::vector<double> eps_list;
  conv->add_option("--grids", grids, "meshes, e.g. 32,64,128")->delimiter(',');
  conv->add_option("--eps-list", eps_list, "Knudsen numbers, e.g. 1,1e-2,1e-5")->delimiter(',');

  auto* cmp = app.add_subcommand("compare", "distance between two runs' diagnostics");
  std::string dir_a, dir_b, norm = "l1";
  std::vector<std::string> fields{"rho", "u_x", "T"};
  std::optional<double> tol;
  cmp->add_option("a", dir_a, "run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("b", dir_b, "reference run directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--fields", fields, "columns to compare")->delimiter(',');
  cmp->add_option("--norm", norm, "l1 or linf");
  cmp->add_option("--tol", tol, "exit 4 when the largest distance exceeds this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(experiment, config_file, out, o);
    if (*conv) return cmd_convergence(experiment, config_file, out, grids, eps_list, o);
    return cmd_compare(dir_a, dir_b, fields, norm, tol);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitSolver;
  }
}
