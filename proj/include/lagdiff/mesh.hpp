#pragma once

// Simplicial reference meshes (segments in 1D, triangles in 2D), deformed
// configurations given by nodal positions, and the piecewise-constant
// deformation gradient of the induced piecewise-linear flow map.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lagdiff {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

template <int D>
using Mat = Eigen::Matrix<double, D, D>;

/// Error raised when a configuration leaves the admissible set
/// (some element has non-positive Jacobian determinant).
struct admissibility_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error raised for malformed meshes or mesh files.
struct mesh_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reference mesh of the initial support: a chain of segments (D = 1) or a
/// conforming triangulation (D = 2).  Derived geometric data is filled in by
/// finalize() and is read-only afterwards.
template <int D>
struct Triangulation {
  static_assert(D == 1 || D == 2, "only 1D and 2D meshes are supported");
  static constexpr int dim = D;
  static constexpr int verts_per_element = D + 1;

  using Element = std::array<int, D + 1>;

  std::vector<Vec<D>> nodes;      ///< reference coordinates X_i
  std::vector<Element> elements;  ///< vertex indices, positively oriented

  // Derived data (valid after finalize()):
  std::vector<std::array<Vec<D>, D + 1>> grads;  ///< gradients of the vertex hat functions
  std::vector<double> measures;                  ///< reference length / area per element
  std::vector<Vec<D>> centroids;                 ///< reference element centroids
  std::vector<std::vector<int>> patches;         ///< node -> incident elements
  std::vector<char> boundary_node;               ///< 1 if the node lies on the boundary
  std::vector<std::vector<int>> boundary_loops;  ///< closed boundary walks (2D); endpoints (1D)

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
  int n_dofs() const { return D * n_nodes(); }

  /// Computes hat-function gradients, measures, centroids, adjacency and
  /// boundary data.  Elements with negative orientation are silently
  /// reordered; degenerate elements are an error.
  void finalize();
};

/// Deformed configuration: one position per mesh node, stored coordinate-major
/// (all x values, then all y values) so matching scalar operators act blockwise.
template <int D>
struct Configuration {
  Eigen::VectorXd dof;
  int n = 0;

  static Configuration identity(const Triangulation<D>& mesh) {
    Configuration cfg;
    cfg.n = mesh.n_nodes();
    cfg.dof.resize(D * cfg.n);
    for (int i = 0; i < cfg.n; ++i)
      for (int c = 0; c < D; ++c) cfg.dof[c * cfg.n + i] = mesh.nodes[i][c];
    return cfg;
  }

  double coord(int c, int i) const { return dof[c * n + i]; }
  double& coord(int c, int i) { return dof[c * n + i]; }

  Vec<D> pos(int i) const {
    Vec<D> x;
    for (int c = 0; c < D; ++c) x[c] = dof[c * n + i];
    return x;
  }

  void set_pos(int i, const Vec<D>& x) {
    for (int c = 0; c < D; ++c) dof[c * n + i] = x[c];
  }
};

/// Deformation gradient F_e of the piecewise-linear map on element e:
/// F_e = sum_l x_l (grad lambda_l)^T with x_l the deformed vertex positions.
template <int D>
Mat<D> deformation_gradient(const Triangulation<D>& mesh, const Configuration<D>& cfg, int e) {
  Mat<D> F = Mat<D>::Zero();
  const auto& el = mesh.elements[e];
  const auto& g = mesh.grads[e];
  for (int l = 0; l <= D; ++l)
    for (int r = 0; r < D; ++r)
      for (int c = 0; c < D; ++c) F(r, c) += cfg.coord(r, el[l]) * g[l][c];
  return F;
}

template <int D>
double det_F(const Triangulation<D>& mesh, const Configuration<D>& cfg, int e) {
  return deformation_gradient(mesh, cfg, e).determinant();
}

/// Smallest element Jacobian determinant; the configuration is admissible iff
/// this is strictly positive.
template <int D>
double admissibility_margin(const Triangulation<D>& mesh, const Configuration<D>& cfg) {
  double m = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.n_elements(); ++e) m = std::min(m, det_F(mesh, cfg, e));
  return m;
}

template <int D>
bool is_admissible(const Triangulation<D>& mesh, const Configuration<D>& cfg) {
  return admissibility_margin(mesh, cfg) > 0.0;
}

// ---------------------------------------------------------------------------
// finalize()

template <>
inline void Triangulation<1>::finalize() {
  const int nn = n_nodes();
  const int ne = n_elements();
  if (nn < 2 || ne < 1) throw mesh_error("mesh: need at least one segment");
  grads.assign(ne, {});
  measures.assign(ne, 0.0);
  centroids.assign(ne, Vec<1>::Zero());
  patches.assign(nn, {});
  boundary_node.assign(nn, 0);
  for (int e = 0; e < ne; ++e) {
    auto& el = elements[e];
    for (int v : el)
      if (v < 0 || v >= nn)
        throw mesh_error("mesh: element " + std::to_string(e) + " references node " +
                         std::to_string(v) + " out of range");
    double h = nodes[el[1]][0] - nodes[el[0]][0];
    if (h < 0.0) {  // reorder so the reference map is orientation preserving
      std::swap(el[0], el[1]);
      h = -h;
    }
    if (h == 0.0) throw mesh_error("mesh: element " + std::to_string(e) + " is degenerate");
    grads[e][0][0] = -1.0 / h;
    grads[e][1][0] = 1.0 / h;
    measures[e] = h;
    centroids[e][0] = 0.5 * (nodes[el[0]][0] + nodes[el[1]][0]);
    patches[el[0]].push_back(e);
    patches[el[1]].push_back(e);
  }
  // Endpoints of the chain appear in exactly one segment.
  std::vector<int> ends;
  for (int i = 0; i < nn; ++i)
    if (patches[i].size() == 1) {
      boundary_node[i] = 1;
      ends.push_back(i);
    } else if (patches[i].size() != 2) {
      throw mesh_error("mesh: node " + std::to_string(i) + " belongs to " +
                       std::to_string(patches[i].size()) + " segments; not a chain");
    }
  if (ends.size() != 2) throw mesh_error("mesh: segment mesh is not a single chain");
  if (nodes[ends[0]][0] > nodes[ends[1]][0]) std::swap(ends[0], ends[1]);
  boundary_loops = {{ends[0]}, {ends[1]}};
}

template <>
inline void Triangulation<2>::finalize() {
  const int nn = n_nodes();
  const int ne = n_elements();
  if (nn < 3 || ne < 1) throw mesh_error("mesh: need at least one triangle");
  grads.assign(ne, {});
  measures.assign(ne, 0.0);
  centroids.assign(ne, Vec<2>::Zero());
  patches.assign(nn, {});
  boundary_node.assign(nn, 0);
  for (int e = 0; e < ne; ++e) {
    auto& el = elements[e];
    for (int v : el)
      if (v < 0 || v >= nn)
        throw mesh_error("mesh: element " + std::to_string(e) + " references node " +
                         std::to_string(v) + " out of range");
    Vec<2> p0 = nodes[el[0]], p1 = nodes[el[1]], p2 = nodes[el[2]];
    double twice_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if (twice_area < 0.0) {  // make counter-clockwise
      std::swap(el[1], el[2]);
      std::swap(p1, p2);
      twice_area = -twice_area;
    }
    if (twice_area <= 1e-14 * (p1 - p0).norm() * (p2 - p0).norm())
      throw mesh_error("mesh: element " + std::to_string(e) + " is degenerate");
    // grad lambda_l is the inward normal of the opposite edge over twice the area.
    grads[e][0] = Vec<2>(p1[1] - p2[1], p2[0] - p1[0]) / twice_area;
    grads[e][1] = Vec<2>(p2[1] - p0[1], p0[0] - p2[0]) / twice_area;
    grads[e][2] = Vec<2>(p0[1] - p1[1], p1[0] - p0[0]) / twice_area;
    measures[e] = 0.5 * twice_area;
    centroids[e] = (p0 + p1 + p2) / 3.0;
    for (int v : el) patches[v].push_back(e);
  }
  // Boundary edges are those shared by exactly one triangle.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& el : elements)
    for (int l = 0; l < 3; ++l) {
      int a = el[l], b = el[(l + 1) % 3];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  std::map<int, std::vector<int>> link;  // boundary node -> boundary neighbours
  for (const auto& [edge, count] : edge_count) {
    if (count > 2)
      throw mesh_error("mesh: edge (" + std::to_string(edge.first) + "," +
                       std::to_string(edge.second) + ") belongs to " + std::to_string(count) +
                       " triangles");
    if (count == 1) {
      boundary_node[edge.first] = 1;
      boundary_node[edge.second] = 1;
      link[edge.first].push_back(edge.second);
      link[edge.second].push_back(edge.first);
    }
  }
  for (const auto& [node, nbrs] : link)
    if (nbrs.size() != 2)
      throw mesh_error("mesh: boundary node " + std::to_string(node) + " has " +
                       std::to_string(nbrs.size()) + " boundary neighbours; boundary is not a "
                       "union of closed curves");
  // Chain boundary nodes into closed loops.
  boundary_loops.clear();
  std::set<int> unvisited;
  for (const auto& [node, nbrs] : link) unvisited.insert(node);
  while (!unvisited.empty()) {
    int start = *unvisited.begin();
    std::vector<int> loop = {start};
    unvisited.erase(start);
    int prev = start, cur = link[start][0];
    while (cur != start) {
      loop.push_back(cur);
      unvisited.erase(cur);
      const auto& nbrs = link[cur];
      int next = (nbrs[0] == prev) ? nbrs[1] : nbrs[0];
      prev = cur;
      cur = next;
    }
    boundary_loops.push_back(std::move(loop));
  }
}

// ---------------------------------------------------------------------------
// Mesh builders

/// Uniform partition of [lo, hi] into n_nodes - 1 segments.  When end_splits
/// is positive, the first and last segments are bisected that many times, so
/// the element nearest each endpoint has length h / 2^end_splits.
inline Triangulation<1> build_interval(double lo, double hi, int n_nodes, int end_splits = 0) {
  if (!(hi > lo)) throw mesh_error("build_interval: need hi > lo");
  if (n_nodes < 2) throw mesh_error("build_interval: need at least two nodes");
  std::vector<double> xs(n_nodes);
  const double h = (hi - lo) / (n_nodes - 1);
  for (int i = 0; i < n_nodes; ++i) xs[i] = lo + i * h;
  xs.back() = hi;
  for (int s = 0; s < end_splits; ++s) {
    xs.insert(xs.begin() + 1, 0.5 * (xs[0] + xs[1]));
    xs.insert(xs.end() - 1, 0.5 * (xs[xs.size() - 2] + xs.back()));
  }
  Triangulation<1> mesh;
  mesh.nodes.resize(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) mesh.nodes[i][0] = xs[i];
  for (size_t i = 0; i + 1 < xs.size(); ++i)
    mesh.elements.push_back({static_cast<int>(i), static_cast<int>(i + 1)});
  mesh.finalize();
  return mesh;
}

/// Structured triangulation of the square [lo, hi]^2 with cells x cells
/// quadrilaterals, each split along its main diagonal.
inline Triangulation<2> build_square(double lo, double hi, int cells) {
  if (!(hi > lo)) throw mesh_error("build_square: need hi > lo");
  if (cells < 1) throw mesh_error("build_square: need at least one cell");
  Triangulation<2> mesh;
  const int n = cells + 1;
  const double h = (hi - lo) / cells;
  mesh.nodes.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) mesh.nodes.push_back(Vec<2>(lo + i * h, lo + j * h));
  auto id = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      mesh.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  mesh.finalize();
  return mesh;
}

namespace detail {

/// Triangulates the band between two concentric node rings given by their
/// indices and angles (both sorted ascending in [0, 2pi)).  Appends one
/// triangle per advance of a two-pointer walk around the rings.
inline void triangulate_band(const std::vector<int>& inner, const std::vector<double>& inner_ang,
                             const std::vector<int>& outer, const std::vector<double>& outer_ang,
                             bool closed, std::vector<std::array<int, 3>>& out) {
  const int ni = static_cast<int>(inner.size());
  const int no = static_cast<int>(outer.size());
  const double two_pi = 2.0 * M_PI;
  const int si = closed ? ni : ni - 1;
  const int so = closed ? no : no - 1;
  auto ang_i = [&](int k) { return inner_ang[k % ni] + two_pi * (k / ni); };
  auto ang_o = [&](int k) { return outer_ang[k % no] + two_pi * (k / no); };
  int i = 0, j = 0;
  while (i < si || j < so) {
    bool advance_outer;
    if (i == si)
      advance_outer = true;
    else if (j == so)
      advance_outer = false;
    else
      advance_outer = ang_o(j + 1) <= ang_i(i + 1);
    if (advance_outer) {
      out.push_back({inner[i % ni], outer[j % no], outer[(j + 1) % no]});
      ++j;
    } else {
      out.push_back({inner[i % ni], outer[j % no], inner[(i + 1) % ni]});
      ++i;
    }
  }
}

}  // namespace detail

/// Disk of the given radius meshed as concentric rings around a centre node.
/// The radial spacing follows h(u) proportional to 1 / (1 + (grade_ratio - 1) u^grade_power)
/// with u the relative radius, so grade_ratio > 1 concentrates nodes near the
/// rim; the ring node counts scale with angular_factor * circumference / spacing.
inline Triangulation<2> build_disk(double radius, int rings, double angular_factor = 1.0,
                                   double grade_ratio = 1.0, double grade_power = 1.0) {
  if (!(radius > 0.0)) throw mesh_error("build_disk: need positive radius");
  if (rings < 1) throw mesh_error("build_disk: need at least one ring");
  if (!(grade_ratio >= 1.0)) throw mesh_error("build_disk: grade_ratio must be >= 1");
  // Radii from the cumulative graded spacing, rescaled to land on the rim.
  std::vector<double> r(rings + 1, 0.0);
  for (int k = 1; k <= rings; ++k) {
    double u = (k - 0.5) / rings;
    r[k] = r[k - 1] + 1.0 / (1.0 + (grade_ratio - 1.0) * std::pow(u, grade_power));
  }
  for (int k = 1; k <= rings; ++k) r[k] *= radius / r[rings];

  Triangulation<2> mesh;
  mesh.nodes.push_back(Vec<2>::Zero());
  std::vector<std::vector<int>> ring_ids(rings + 1);
  std::vector<std::vector<double>> ring_ang(rings + 1);
  for (int k = 1; k <= rings; ++k) {
    double spacing = (k < rings ? r[k + 1] : r[k]) - r[k - 1];
    spacing *= 0.5 * (k < rings ? 1.0 : 2.0);  // one-sided at the rim
    int count = std::max(6, static_cast<int>(std::lround(angular_factor * 2.0 * M_PI * r[k] / spacing)));
    double offset = (k % 2 == 1) ? 0.0 : M_PI / count;
    for (int m = 0; m < count; ++m) {
      double ang = offset + 2.0 * M_PI * m / count;
      ring_ids[k].push_back(mesh.n_nodes());
      ring_ang[k].push_back(ang);
      mesh.nodes.push_back(Vec<2>(r[k] * std::cos(ang), r[k] * std::sin(ang)));
    }
  }
  // Central fan, then band by band outwards.
  const auto& first = ring_ids[1];
  for (size_t m = 0; m < first.size(); ++m)
    mesh.elements.push_back({0, first[m], first[(m + 1) % first.size()]});
  for (int k = 1; k < rings; ++k)
    detail::triangulate_band(ring_ids[k], ring_ang[k], ring_ids[k + 1], ring_ang[k + 1], true,
                             mesh.elements);
  mesh.finalize();
  return mesh;
}

/// Three-quarter annulus (the part of r_in <= r <= r_out outside the open
/// first quadrant) closed off by two half-disk caps of radius
/// (r_out - r_in)/2 centred on the straight edges at mid-radius.  The caps
/// share their diameter nodes with the annulus, so the result is a single
/// conforming mesh.  radial_divisions must be even so the cap rings land on
/// the shared edge nodes.
inline Triangulation<2> build_horseshoe(double r_in, double r_out, int radial_divisions,
                                        int angular_divisions) {
  if (!(0.0 < r_in && r_in < r_out)) throw mesh_error("build_horseshoe: need 0 < r_in < r_out");
  const int nr = radial_divisions;
  const int na = angular_divisions;
  if (nr < 2 || nr % 2 != 0)
    throw mesh_error("build_horseshoe: radial_divisions must be even and >= 2");
  if (na < 3) throw mesh_error("build_horseshoe: need at least three angular divisions");

  Triangulation<2> mesh;
  auto add_node = [&](double x, double y) {
    mesh.nodes.push_back(Vec<2>{x, y});
    return static_cast<int>(mesh.nodes.size()) - 1;
  };

  // Annulus grid over theta in [pi/2, 2 pi], node (p, q) at radius index p.
  std::vector<int> grid((nr + 1) * (na + 1));
  auto gid = [&](int p, int q) { return grid[q * (nr + 1) + p]; };
  for (int q = 0; q <= na; ++q) {
    const double th = 0.5 * M_PI + 1.5 * M_PI * q / na;
    for (int p = 0; p <= nr; ++p) {
      const double r = r_in + (r_out - r_in) * p / nr;
      grid[q * (nr + 1) + p] = add_node(r * std::cos(th), r * std::sin(th));
    }
  }
  for (int q = 0; q < na; ++q)
    for (int p = 0; p < nr; ++p) {
      mesh.elements.push_back({gid(p, q), gid(p + 1, q), gid(p + 1, q + 1)});
      mesh.elements.push_back({gid(p, q), gid(p + 1, q + 1), gid(p, q + 1)});
    }

  // Each cap is a fan of semicircular rings around the mid-edge node; ring j
  // ends on the shared edge nodes at radius offsets +-(j * edge spacing).
  const double cap_r = 0.5 * (r_out - r_in);
  const double delta = (r_out - r_in) / nr;
  const int nc = nr / 2;
  auto build_cap = [&](int q_edge, const Vec<2>& normal, const Vec<2>& diameter) {
    const Vec<2> centre = mesh.nodes[gid(nc, q_edge)];
    std::vector<int> prev = {gid(nc, q_edge)};
    std::vector<double> prev_ang = {0.0};
    for (int j = 1; j <= nc; ++j) {
      const double rho = cap_r * j / nc;
      const int m = std::max<int>(2, std::lround(M_PI * rho / delta));
      std::vector<int> ring;
      std::vector<double> ring_ang;
      ring.push_back(gid(nc - j, q_edge));
      ring_ang.push_back(-0.5 * M_PI);
      for (int k = 1; k < m; ++k) {
        const double phi = -0.5 * M_PI + M_PI * k / m;
        const Vec<2> p = centre + rho * (std::cos(phi) * normal + std::sin(phi) * diameter);
        ring.push_back(add_node(p[0], p[1]));
        ring_ang.push_back(phi);
      }
      ring.push_back(gid(nc + j, q_edge));
      ring_ang.push_back(0.5 * M_PI);
      detail::triangulate_band(prev, prev_ang, ring, ring_ang, false, mesh.elements);
      prev = std::move(ring);
      prev_ang = std::move(ring_ang);
    }
  };
  build_cap(0, Vec<2>{1.0, 0.0}, Vec<2>{0.0, 1.0});   // edge on the +y axis, bulge +x
  build_cap(na, Vec<2>{0.0, 1.0}, Vec<2>{1.0, 0.0});  // edge on the +x axis, bulge +y

  mesh.finalize();
  return mesh;
}

// ---------------------------------------------------------------------------
// Mesh file format
//
//   # optional comments
//   nodes <count>
//   <x> [<y>]          one line per node
//   elements <count>
//   <i> <j> [<k>]      zero-based vertex indices, one line per element

template <int D>
Triangulation<D> load_mesh(std::istream& in) {
  Triangulation<D> mesh;
  int line_no = 0;
  auto next_line = [&](std::string& s) -> bool {
    while (std::getline(in, s)) {
      ++line_no;
      if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
      if (s.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) -> mesh_error {
    return mesh_error("mesh file line " + std::to_string(line_no) + ": " + what);
  };
  std::string line, word;
  long count = 0;
  if (!next_line(line)) throw fail("expected 'nodes <count>', got end of file");
  {
    std::istringstream ls(line);
    if (!(ls >> word >> count) || word != "nodes" || count < 1)
      throw fail("expected 'nodes <count>', got '" + line + "'");
  }
  for (long i = 0; i < count; ++i) {
    if (!next_line(line)) throw fail("expected node coordinates, got end of file");
    std::istringstream ls(line);
    Vec<D> x;
    for (int c = 0; c < D; ++c)
      if (!(ls >> x[c])) throw fail("expected " + std::to_string(D) + " coordinates, got '" + line + "'");
    mesh.nodes.push_back(x);
  }
  if (!next_line(line)) throw fail("expected 'elements <count>', got end of file");
  {
    std::istringstream ls(line);
    if (!(ls >> word >> count) || word != "elements" || count < 1)
      throw fail("expected 'elements <count>', got '" + line + "'");
  }
  for (long e = 0; e < count; ++e) {
    if (!next_line(line)) throw fail("expected element indices, got end of file");
    std::istringstream ls(line);
    typename Triangulation<D>::Element el;
    for (int v = 0; v <= D; ++v)
      if (!(ls >> el[v])) throw fail("expected " + std::to_string(D + 1) + " indices, got '" + line + "'");
    mesh.elements.push_back(el);
  }
  try {
    mesh.finalize();
  } catch (const mesh_error& err) {
    throw mesh_error(std::string("mesh file: ") + err.what());
  }
  return mesh;
}

template <int D>
Triangulation<D> load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mesh_error("mesh file '" + path + "': cannot open");
  try {
    return load_mesh<D>(in);
  } catch (const mesh_error& err) {
    throw mesh_error("'" + path + "': " + err.what());
  }
}

template <int D>
void write_mesh(const Triangulation<D>& mesh, std::ostream& out) {
  char buf[64];
  out << "nodes " << mesh.n_nodes() << "\n";
  for (const auto& x : mesh.nodes) {
    for (int c = 0; c < D; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", x[c]);
      out << (c ? " " : "") << buf;
    }
    out << "\n";
  }
  out << "elements " << mesh.n_elements() << "\n";
  for (const auto& el : mesh.elements) {
    for (int v = 0; v <= D; ++v) out << (v ? " " : "") << el[v];
    out << "\n";
  }
}

}  // namespace lagdiff
