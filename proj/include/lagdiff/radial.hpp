#pragma once

// Axisymmetric reduction for radially symmetric planar problems.  The state
// is the vector of nodal radii of a chain of concentric annuli; the origin
// node is pinned.  An annulus with reference area A0 and current area A
// carries the density rho0 * A0 / A, so the discrete energy, its
// derivatives, and the mobility of the plain dissipation form all reduce to
// one-dimensional expressions in the radii.  This provides an independent
// observer for radially symmetric runs of the full planar discretization.

#include "lagdiff/energy.hpp"
#include "lagdiff/solver.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lagdiff::radial {

struct AxisymmetricGrid {
  std::vector<double> R;        ///< reference radii, ascending, R[0] == 0
  std::vector<double> area0;    ///< reference annulus areas
  std::vector<double> rho_mid;  ///< initial density at reference mid-radii

  int n_nodes() const { return static_cast<int>(R.size()); }
  int n_annuli() const { return static_cast<int>(area0.size()); }
};

template <class Datum>
AxisymmetricGrid make_grid(const std::vector<double>& radii, const Datum& rho0) {
  if (radii.size() < 2) throw std::invalid_argument("radial: need at least two radii");
  if (radii.front() != 0.0) throw std::invalid_argument("radial: grid must start at the origin");
  AxisymmetricGrid g;
  g.R = radii;
  g.area0.resize(radii.size() - 1);
  g.rho_mid.resize(radii.size() - 1);
  for (size_t e = 0; e + 1 < radii.size(); ++e) {
    if (!(radii[e + 1] > radii[e]))
      throw std::invalid_argument("radial: radii must be strictly increasing");
    g.area0[e] = M_PI * (radii[e + 1] * radii[e + 1] - radii[e] * radii[e]);
    g.rho_mid[e] = rho0(0.5 * (radii[e] + radii[e + 1]));
    if (g.rho_mid[e] < 0.0) throw std::invalid_argument("radial: negative density");
  }
  return g;
}

/// Evenly spaced radial grid on [0, R].
template <class Datum>
AxisymmetricGrid make_uniform_grid(double R, int n_nodes, const Datum& rho0) {
  if (n_nodes < 2) throw std::invalid_argument("radial: need at least two radii");
  std::vector<double> radii(n_nodes);
  for (int i = 0; i < n_nodes; ++i) radii[i] = R * i / (n_nodes - 1);
  return make_grid(radii, rho0);
}

namespace detail {

inline void check_state(const AxisymmetricGrid& grid, const Eigen::VectorXd& r,
                        const char* where) {
  if (r.size() != grid.n_nodes())
    throw std::invalid_argument(std::string(where) + ": bad state size");
}

inline bool strictly_expanding(const Eigen::VectorXd& r) {
  if (std::abs(r[0]) > 0.0) return false;  // origin must stay put
  for (int i = 0; i + 1 < r.size(); ++i)
    if (!(r[i + 1] > r[i])) return false;
  return true;
}

}  // namespace detail

/// Discrete energy of the annulus chain.
inline double energy(const AxisymmetricGrid& grid, const EnergyLaw& law,
                     const Eigen::VectorXd& r) {
  detail::check_state(grid, r, "radial energy");
  double E = 0.0;
  for (int e = 0; e < grid.n_annuli(); ++e) {
    const double A = M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
    if (!(A > 0.0))
      throw admissibility_error("radial energy: annulus " + std::to_string(e) +
                                " has area " + std::to_string(A));
    if (grid.rho_mid[e] <= 0.0) continue;
    E += law.omega(grid.rho_mid[e] * grid.area0[e] / A) * A;
  }
  return E;
}

/// Gradient of the discrete energy with respect to the nodal radii:
/// d/dA [omega(m/A) A] = -p(m/A), and dA/dr is -2 pi r at the inner node,
/// +2 pi r at the outer one.
inline Eigen::VectorXd energy_gradient(const AxisymmetricGrid& grid, const EnergyLaw& law,
                                       const Eigen::VectorXd& r) {
  detail::check_state(grid, r, "radial energy_gradient");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(r.size());
  for (int e = 0; e < grid.n_annuli(); ++e) {
    if (grid.rho_mid[e] <= 0.0) continue;
    const double A = M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
    if (!(A > 0.0))
      throw admissibility_error("radial energy_gradient: annulus " + std::to_string(e) +
                                " has area " + std::to_string(A));
    const double p = law.pressure(grid.rho_mid[e] * grid.area0[e] / A);
    g[e] += p * 2.0 * M_PI * r[e];          // -p * dA/dr_inner
    g[e + 1] -= p * 2.0 * M_PI * r[e + 1];  // -p * dA/dr_outer
  }
  return g;
}

/// Second derivative of the discrete energy.
inline Eigen::SparseMatrix<double> energy_hessian(const AxisymmetricGrid& grid,
                                                  const EnergyLaw& law,
                                                  const Eigen::VectorXd& r) {
  detail::check_state(grid, r, "radial energy_hessian");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * grid.n_annuli());
  for (int e = 0; e < grid.n_annuli(); ++e) {
    if (grid.rho_mid[e] <= 0.0) continue;
    const double A = M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
    if (!(A > 0.0))
      throw admissibility_error("radial energy_hessian: annulus " + std::to_string(e) +
                                " has area " + std::to_string(A));
    const double rho = grid.rho_mid[e] * grid.area0[e] / A;
    const double curv = rho * law.pressure_rho(rho) / A;  // d(-p(m/A))/dA
    const double p = law.pressure(rho);
    const double dA[2] = {-2.0 * M_PI * r[e], 2.0 * M_PI * r[e + 1]};
    const double d2A[2] = {-2.0 * M_PI, 2.0 * M_PI};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        double v = curv * dA[a] * dA[b];
        if (a == b) v -= p * d2A[a];
        trip.emplace_back(e + a, e + b, v);
      }
  }
  Eigen::SparseMatrix<double> H(r.size(), r.size());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

/// Mobility of the plain dissipation form on the deformed annulus chain:
/// exact integrals of products of radial hat functions against 2 pi r dr.
inline Eigen::SparseMatrix<double> mobility(const Eigen::VectorXd& r) {
  if (!detail::strictly_expanding(r))
    throw admissibility_error("radial mobility: radii must be 0 = r_0 < r_1 < ...");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * (r.size() - 1));
  for (int e = 0; e + 1 < r.size(); ++e) {
    const double a = r[e];
    const double h = r[e + 1] - r[e];
    const double c = 2.0 * M_PI * h / 12.0;
    trip.emplace_back(e, e, c * (4.0 * a + h));
    trip.emplace_back(e + 1, e + 1, c * (4.0 * a + 3.0 * h));
    trip.emplace_back(e, e + 1, c * (2.0 * a + h));
    trip.emplace_back(e + 1, e, c * (2.0 * a + h));
  }
  Eigen::SparseMatrix<double> M(r.size(), r.size());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// One backward-Euler step: minimize the dissipation-plus-energy objective
/// over radii with the origin pinned.  Only the plain dissipation form is
/// meaningful here (the density-weighted mobility would need the full planar
/// geometry), so other laws are rejected.
inline StepReport step(const AxisymmetricGrid& grid, const EnergyLaw& law, Eigen::VectorXd& r,
                       double tau, const NewtonOptions& opt = {}) {
  if (law.law != Law::law2)
    throw std::invalid_argument("radial step: only the plain dissipation form is supported");
  if (law.formal()) throw std::invalid_argument("radial step: formal regime not supported");
  if (!(tau > 0.0)) throw std::invalid_argument("radial step: tau must be positive");
  detail::check_state(grid, r, "radial step");
  if (!detail::strictly_expanding(r))
    throw admissibility_error("radial step: initial radii not admissible");

  const Eigen::VectorXd rn = r;
  const Eigen::SparseMatrix<double> M = mobility(rn);

  NewtonCallbacks cb;
  cb.merit = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd d = x - rn;
    return 0.5 / tau * d.dot(M * d) + energy(grid, law, x);
  };
  cb.gradient = [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(M * (x - rn) / tau + energy_gradient(grid, law, x));
  };
  cb.hessian = [&](const Eigen::VectorXd& x) {
    return Eigen::SparseMatrix<double>(energy_hessian(grid, law, x) + M / tau);
  };
  cb.feasible = detail::strictly_expanding;

  std::vector<int> free_idx(r.size() - 1);
  for (size_t k = 0; k < free_idx.size(); ++k) free_idx[k] = static_cast<int>(k + 1);

  StepReport rep;
  rep.energy_before = energy(grid, law, rn);
  const NewtonResult res = newton_minimize(cb, r, free_idx, opt);
  rep.newton_iterations = res.iterations;
  rep.residual = res.residual;
  const Eigen::VectorXd d = res.x - rn;
  rep.dissipation = 0.5 / (tau * tau) * d.dot(M * d);
  rep.energy_after = energy(grid, law, res.x);
  double margin = std::numeric_limits<double>::infinity();
  for (int e = 0; e + 1 < res.x.size(); ++e) {
    const double A = M_PI * (res.x[e + 1] * res.x[e + 1] - res.x[e] * res.x[e]);
    margin = std::min(margin, A / grid.area0[e]);
  }
  rep.margin = margin;
  const double slack = 1e-9 * std::max(1.0, std::abs(rep.energy_before));
  if (rep.energy_after - rep.energy_before > -tau * rep.dissipation + slack)
    throw step_error("radial step: energy inequality violated");
  r = res.x;
  rep.accepted = true;
  return rep;
}

/// March the annulus chain to time T, recording the outer radius after every
/// step.  Returns (times, outer radii) starting with the initial state.
struct RadialTrace {
  std::vector<double> times;
  std::vector<double> outer;
  Eigen::VectorXd final_r;
};

inline RadialTrace run(const AxisymmetricGrid& grid, const EnergyLaw& law, double tau, double T,
                       const NewtonOptions& opt = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("radial run: tau must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("radial run: T must be nonnegative");
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(grid.R.data(), grid.n_nodes());
  RadialTrace trace;
  trace.times.push_back(0.0);
  trace.outer.push_back(r[r.size() - 1]);
  const long n_steps = std::lround(std::ceil(T / tau - 1e-12));
  double t = 0.0;
  for (long s = 0; s < n_steps; ++s) {
    const double dt = std::min(tau, T - t);
    step(grid, law, r, dt, opt);
    t += dt;
    trace.times.push_back(t);
    trace.outer.push_back(r[r.size() - 1]);
  }
  trace.final_r = std::move(r);
  return trace;
}

/// Piecewise-constant density carried by each annulus of a deformed chain.
inline std::vector<double> density(const AxisymmetricGrid& grid, const Eigen::VectorXd& r) {
  detail::check_state(grid, r, "radial density");
  std::vector<double> rho(grid.n_annuli());
  for (int e = 0; e < grid.n_annuli(); ++e) {
    const double A = M_PI * (r[e + 1] * r[e + 1] - r[e] * r[e]);
    if (!(A > 0.0))
      throw admissibility_error("radial density: annulus " + std::to_string(e) + " has area " +
                                std::to_string(A));
    rho[e] = grid.rho_mid[e] * grid.area0[e] / A;
  }
  return rho;
}

}  // namespace lagdiff::radial
