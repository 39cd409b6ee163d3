#pragma once

// Measurement helpers: density recovery on the deformed mesh, error norms
// against a reference solution, interface (support boundary) tracking, the
// onset time of support motion, and convergence-order estimation.

#include "lagdiff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lagdiff {

/// Piecewise-constant density carried by each element: the initial centroid
/// density divided by the volume change.
template <int D>
std::vector<double> density_at_centroids(const Triangulation<D>& mesh,
                                         const std::vector<double>& rho0_c,
                                         const Configuration<D>& cfg) {
  if (static_cast<int>(rho0_c.size()) != mesh.n_elements())
    throw std::invalid_argument("density_at_centroids: density size mismatch");
  std::vector<double> rho(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double s = det_F(mesh, cfg, e);
    if (!(s > 0.0))
      throw admissibility_error("density_at_centroids: element " + std::to_string(e) +
                                " has det F = " + std::to_string(s));
    rho[e] = rho0_c[e] / s;
  }
  return rho;
}

/// Nodal density recovered from the surrounding patch: the ratio of the
/// reference patch mass to the deformed patch volume.
template <int D>
std::vector<double> density_at_nodes(const Triangulation<D>& mesh,
                                     const std::vector<double>& rho0_c,
                                     const Configuration<D>& cfg) {
  if (static_cast<int>(rho0_c.size()) != mesh.n_elements())
    throw std::invalid_argument("density_at_nodes: density size mismatch");
  std::vector<double> rho(mesh.n_nodes(), 0.0);
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    double mass = 0.0, volume = 0.0;
    for (const int e : mesh.patches[i]) {
      const double s = det_F(mesh, cfg, e);
      if (!(s > 0.0))
        throw admissibility_error("density_at_nodes: element " + std::to_string(e) +
                                  " has det F = " + std::to_string(s));
      mass += rho0_c[e] * mesh.measures[e];
      volume += s * mesh.measures[e];
    }
    rho[i] = mass / volume;
  }
  return rho;
}

/// Nodal density via the point value of the initial datum divided by the
/// reference-measure average of det F over the node's patch:
///   rho(node i) = rho0(X_i) * sum_e |tau_e| / sum_e |tau_e| det F_e.
/// This is the reconstruction the convergence tables report at the centre
/// node; it differs from density_at_nodes, which averages element masses.
template <int D>
double pointwise_nodal_density(const Triangulation<D>& mesh, const Configuration<D>& cfg,
                               int node, double rho0_node) {
  if (node < 0 || node >= mesh.n_nodes())
    throw std::invalid_argument("pointwise_nodal_density: node index out of range");
  double measure = 0.0, volume = 0.0;
  for (const int e : mesh.patches[node]) {
    const double s = det_F(mesh, cfg, e);
    if (!(s > 0.0))
      throw admissibility_error("pointwise_nodal_density: element " + std::to_string(e) +
                                " has det F = " + std::to_string(s));
    measure += mesh.measures[e];
    volume += s * mesh.measures[e];
  }
  return rho0_node * measure / volume;
}

/// L2 distance between the computed piecewise-constant density and a
/// reference profile sampled at the deformed element centroids, integrated
/// over the deformed mesh:  sqrt( sum_e (rho_e - ref(x_e))^2 |tau_e| det F_e ).
template <int D>
double l2_error(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                const Configuration<D>& cfg, const std::function<double(const Vec<D>&)>& ref) {
  const std::vector<double> rho = density_at_centroids(mesh, rho0_c, cfg);
  double acc = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Vec<D> xc = Vec<D>::Zero();
    for (const int v : mesh.elements[e]) xc += cfg.pos(v);
    xc /= static_cast<double>(D + 1);
    const double diff = rho[e] - ref(xc);
    acc += diff * diff * mesh.measures[e] * det_F(mesh, cfg, e);
  }
  return std::sqrt(acc);
}

/// Maximum centroid-wise deviation from a reference profile.
template <int D>
double linf_error(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                  const Configuration<D>& cfg, const std::function<double(const Vec<D>&)>& ref) {
  const std::vector<double> rho = density_at_centroids(mesh, rho0_c, cfg);
  double worst = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Vec<D> xc = Vec<D>::Zero();
    for (const int v : mesh.elements[e]) xc += cfg.pos(v);
    xc /= static_cast<double>(D + 1);
    worst = std::max(worst, std::abs(rho[e] - ref(xc)));
  }
  return worst;
}

/// Deviation of the trajectory of one reference node from a prescribed
/// position (used to track how well the particle that started at a given
/// reference point is transported).
template <int D>
double node_position_error(const Configuration<D>& cfg, int node, const Vec<D>& expected) {
  if (node < 0 || node >= cfg.n) throw std::invalid_argument("node_position_error: bad node");
  return (cfg.pos(node) - expected).norm();
}

/// Index of the reference node closest to a given reference point.
template <int D>
int nearest_node(const Triangulation<D>& mesh, const Vec<D>& X) {
  int best = 0;
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double di = (mesh.nodes[i] - X).norm();
    if (di < d) {
      d = di;
      best = i;
    }
  }
  return best;
}

/// Signed positions of the two support endpoints of a segment chain.
struct Interface1d {
  double left = 0.0;
  double right = 0.0;
};

inline Interface1d interface_extract(const Triangulation<1>& mesh, const Configuration<1>& cfg) {
  Interface1d itf{std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
  bool found = false;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (!mesh.boundary_node[i]) continue;
    itf.left = std::min(itf.left, cfg.coord(0, i));
    itf.right = std::max(itf.right, cfg.coord(0, i));
    found = true;
  }
  if (!found) throw mesh_error("interface_extract: chain has no boundary nodes");
  return itf;
}

/// Radius of the support boundary of a deformed planar mesh, measured as the
/// smallest distance from the origin to a boundary node (the tightest bound
/// on the support radius a radially expanding deformation provides).
inline double interface_radius(const Triangulation<2>& mesh, const Configuration<2>& cfg) {
  double r = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (!mesh.boundary_node[i]) continue;
    r = std::min(r, cfg.pos(i).norm());
    found = true;
  }
  if (!found) throw mesh_error("interface_radius: mesh has no boundary nodes");
  return r;
}

/// Deformed boundary polyline(s) of a planar mesh, one closed loop per
/// connected boundary component, in the loop order recorded by the mesh.
inline std::vector<std::vector<Vec<2>>> boundary_polylines(const Triangulation<2>& mesh,
                                                           const Configuration<2>& cfg) {
  std::vector<std::vector<Vec<2>>> out;
  for (const auto& loop : mesh.boundary_loops) {
    std::vector<Vec<2>> poly;
    poly.reserve(loop.size());
    for (const int i : loop) poly.push_back(cfg.pos(i));
    out.push_back(std::move(poly));
  }
  return out;
}

/// First time at which a monotone sequence of support radii has grown past
/// its initial value by more than `margin`; empty if it never does.  The
/// series is sampled as (t_k, radius_k) pairs.
inline std::optional<double> onset_of_motion(const std::vector<double>& times,
                                             const std::vector<double>& radii,
                                             double margin = 1e-8) {
  if (times.size() != radii.size())
    throw std::invalid_argument("onset_of_motion: length mismatch");
  if (times.empty()) return std::nullopt;
  const double base = radii.front();
  for (size_t k = 1; k < times.size(); ++k)
    if (radii[k] > base + margin) return times[k];
  return std::nullopt;
}

/// Total mass of the deformed configuration; by construction it equals the
/// reference mass exactly, so this is mainly a diagnostic identity.
template <int D>
double total_mass(const Triangulation<D>& mesh, const std::vector<double>& rho0_c) {
  double m = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) m += rho0_c[e] * mesh.measures[e];
  return m;
}

/// Observed convergence order between consecutive rows of a refinement
/// ladder: order_k = log(e_{k-1}/e_k) / log(h_{k-1}/h_k).
inline std::vector<double> convergence_orders(const std::vector<double>& h,
                                              const std::vector<double>& err) {
  if (h.size() != err.size()) throw std::invalid_argument("convergence_orders: length mismatch");
  if (h.size() < 2) throw std::invalid_argument("convergence_orders: need at least two rows");
  std::vector<double> p(h.size() - 1);
  for (size_t k = 1; k < h.size(); ++k) {
    if (!(h[k - 1] > 0.0 && h[k] > 0.0 && err[k - 1] > 0.0 && err[k] > 0.0))
      throw std::invalid_argument("convergence_orders: entries must be positive");
    p[k - 1] = std::log(err[k - 1] / err[k]) / std::log(h[k - 1] / h[k]);
  }
  return p;
}

/// Representative mesh size for an N-node discretization: 1/(N-1) on a
/// segment, N^{-1/2} in the plane.
template <int D>
double mesh_size_for(int n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("mesh_size_for: need at least two nodes");
  if constexpr (D == 1) return 1.0 / (n_nodes - 1);
  else return 1.0 / std::sqrt(static_cast<double>(n_nodes));
}

}  // namespace lagdiff
