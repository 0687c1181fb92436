#ifndef KAP_IO_HPP
#define KAP_IO_HPP

// CSV tables, binary distribution snapshots and the grid restriction used to
// compare runs at different resolutions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kap/ap_solver.hpp"
#include "kap/error.hpp"
#include "kap/grid.hpp"

namespace kap {

/// Column-named numeric table; the on-disk form is a header line plus rows.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorKind::SchemaMismatch, "missing column " + name);
    return static_cast<int>(it - columns.begin());
  }

  std::vector<double> values(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

inline void write_csv(const std::filesystem::path& file, const Table& t) {
  std::ofstream os(file);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + file.string());
  os.precision(17);
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << '\n';
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + file.string());
}

inline Table read_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + file.string());
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::SchemaMismatch, "empty csv " + file.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size()) throw Error(ErrorKind::SchemaMismatch, "ragged row in " + file.string());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols{"x", "rho", "u_x", "u_y", "T", "heat_flux_x", "dist_maxwell"};
  return cols;
}

inline Table diagnostics_table(const std::vector<CellDiagnostics>& d) {
  Table t{diagnostics_columns(), {}};
  for (const auto& c : d) t.rows.push_back({c.x, c.rho, c.ux, c.uy, c.T, c.heat_flux, c.dist_maxwell});
  return t;
}

/// File name of the diagnostics written at output time t.
inline std::string diagnostics_name(double t) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "diag_t" << t << ".csv";
  return os.str();
}

// ---------------------------------------------------------------------------
// Snapshots: one text header line, then n_x * n_v * n_v little-endian doubles.

struct Snapshot {
  double x_left = 0.0, x_right = 1.0, v_max = 1.0, t = 0.0;
  Distribution f;
};

inline void write_snapshot(const std::filesystem::path& file, const Snapshot& s) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + file.string());
  os.precision(17);
  os << "KAPSNAP 1 n_x " << s.f.n_x() << " n_v " << s.f.n_v() << " x_left " << s.x_left << " x_right "
     << s.x_right << " v_max " << s.v_max << " t " << s.t << '\n';
  const auto& v = s.f.values();
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + file.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot read " + file.string());
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string magic, key;
  int version = 0, nx = 0, nv = 0;
  Snapshot s;
  hs >> magic >> version >> key >> nx >> key >> nv >> key >> s.x_left >> key >> s.x_right >> key >> s.v_max >>
      key >> s.t;
  if (!hs || magic != "KAPSNAP" || version != 1 || nx <= 0 || nv <= 0)
    throw Error(ErrorKind::SchemaMismatch, "bad snapshot header in " + file.string());
  s.f = Distribution(nx, nv);
  auto& v = s.f.values();
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw Error(ErrorKind::IoError, "truncated snapshot " + file.string());
  return s;
}

// ---------------------------------------------------------------------------
// Restriction and distances

/// Averages pairs of neighboring cells `levels` times. Cell-centered data on a
/// uniform mesh stays second-order accurate under this map.
inline std::vector<double> restrict_cells(std::vector<double> v, int levels) {
  for (int l = 0; l < levels; ++l) {
    if (v.size() % 2) throw Error(ErrorKind::GridIncompatible, "odd cell count cannot be coarsened");
    std::vector<double> c(v.size() / 2);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (v[2 * i] + v[2 * i + 1]);
    v = std::move(c);
  }
  return v;
}

inline Distribution restrict_distribution(const Distribution& f, int levels) {
  Distribution cur = f;
  for (int l = 0; l < levels; ++l) {
    if (cur.n_x() % 2) throw Error(ErrorKind::GridIncompatible, "odd cell count cannot be coarsened");
    Distribution c(cur.n_x() / 2, cur.n_v());
    for (int i = 0; i < c.n_x(); ++i) {
      auto a = cur.cell(2 * i), b = cur.cell(2 * i + 1);
      auto o = c.cell(i);
      for (std::size_t q = 0; q < o.size(); ++q) o[q] = 0.5 * (a[q] + b[q]);
    }
    cur = std::move(c);
  }
  return cur;
}

/// Number of factor-2 coarsenings mapping `fine` cells onto `coarse` cells.
inline int coarsening_levels(std::size_t fine, std::size_t coarse) {
  int levels = 0;
  while (fine > coarse && fine % 2 == 0) {
    fine /= 2;
    ++levels;
  }
  if (fine != coarse) throw Error(ErrorKind::GridIncompatible, "meshes are not related by factors of 2");
  return levels;
}

struct NormPair {
  double l1 = 0.0, linf = 0.0;
};

/// Relative L1 and Linf distances ||a - b|| / ||ref||.
inline NormPair relative_distance(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& ref) {
  if (a.size() != b.size() || a.size() != ref.size()) throw Error(ErrorKind::GridMismatch, "length mismatch");
  double d1 = 0.0, dm = 0.0, r1 = 0.0, rm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    d1 += d;
    dm = std::max(dm, d);
    r1 += std::abs(ref[i]);
    rm = std::max(rm, std::abs(ref[i]));
  }
  return {r1 > 0.0 ? d1 / r1 : d1, rm > 0.0 ? dm / rm : dm};
}

struct FieldDistance {
  double t;
  std::string field;
  NormPair norm;
};

/// Compares the diagnostics tables of two run directories at every output
/// time present in both; the finer mesh is restricted onto the coarser. Fields
/// are relative to run b.
inline std::vector<FieldDistance> compare_runs(const std::filesystem::path& a, const std::filesystem::path& b,
                                               const std::vector<std::string>& fields) {
  namespace fs = std::filesystem;
  std::map<std::string, double> times;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename().string();
    if (name.rfind("diag_t", 0) == 0 && fs::exists(b / name)) times[name] = std::stod(name.substr(6));
  }
  if (times.empty()) throw Error(ErrorKind::SchemaMismatch, "no shared output times");
  std::vector<FieldDistance> out;
  for (const auto& [name, t] : times) {
    const Table ta = read_csv(a / name), tb = read_csv(b / name);
    const std::size_t na = ta.rows.size(), nb = tb.rows.size();
    const int la = na > nb ? coarsening_levels(na, nb) : 0;
    const int lb = nb > na ? coarsening_levels(nb, na) : 0;
    for (const auto& field : fields) {
      const auto va = restrict_cells(ta.values(field), la);
      const auto vb = restrict_cells(tb.values(field), lb);
      out.push_back({t, field, relative_distance(va, vb, vb)});
    }
  }
  return out;
}

}  // namespace kap

#endif  // KAP_IO_HPP
