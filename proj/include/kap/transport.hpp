#ifndef KAP_TRANSPORT_HPP
#define KAP_TRANSPORT_HPP

// Second-order finite-volume discretization of -v_x d/dx f: upwind fluxes on a
// minmod-limited piecewise-linear reconstruction, one independent sweep per
// velocity node.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kap/error.hpp"
#include "kap/grid.hpp"
#include "kap/parallel.hpp"

namespace kap {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

namespace detail {

// Two ghost cells per side. Specular walls mirror v_x, so the ghost for node j
// reads the interior cell at node mirror(j).
inline double ghosted(const Distribution& f, const SpatialMesh& mesh, const VelocityGrid& g, int i,
                      int j, int k) {
  const int nx = mesh.n_x();
  if (i >= 0 && i < nx) return f(i, j, k);
  if (mesh.bc() == Boundary::Periodic) return f(((i % nx) + nx) % nx, j, k);
  const int mirrored = i < 0 ? -1 - i : 2 * nx - 1 - i;
  return f(mirrored, g.mirror(j), k);
}

}  // namespace detail

/// Returns -v_x d/dx f. Conservative: the face fluxes telescope, and at
/// specular walls the fluxes of v and its mirror cancel.
inline Distribution transport_rhs(const Distribution& f, const SpatialMesh& mesh, const VelocityGrid& g) {
  if (f.n_x() != mesh.n_x() || f.n_v() != g.n()) throw Error(ErrorKind::GridMismatch, "transport shapes");
  const int nx = mesh.n_x(), nv = g.n();
  if (nx < 2) throw Error(ErrorKind::GridMismatch, "transport needs at least two cells");
  const double inv_dx = 1.0 / mesh.dx();
  Distribution out(nx, nv);
  parallel_for(static_cast<std::size_t>(nv), [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    const double v = g.node(j);
    // Cells -2 .. nx+1, stored shifted by 2.
    std::vector<double> u(nx + 4), slope(nx + 2), flux(nx + 1);
    for (int k = 0; k < nv; ++k) {
      for (int i = -2; i < nx + 2; ++i) u[i + 2] = detail::ghosted(f, mesh, g, i, j, k);
      // Slopes (as undivided half-increments) for cells -1 .. nx.
      for (int i = -1; i <= nx; ++i)
        slope[i + 1] = 0.5 * minmod(u[i + 2] - u[i + 1], u[i + 3] - u[i + 2]);
      // Face i + 1/2 for i = -1 .. nx-1.
      for (int i = -1; i < nx; ++i) {
        const double state = v > 0.0 ? u[i + 2] + slope[i + 1] : u[i + 3] - slope[i + 2];
        flux[i + 1] = v * state;
      }
      for (int i = 0; i < nx; ++i) out(i, j, k) = -(flux[i + 1] - flux[i]) * inv_dx;
    }
  });
  return out;
}

}  // namespace kap

#endif  // KAP_TRANSPORT_HPP
