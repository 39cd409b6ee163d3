#pragma once

// Time stepping.  One backward-Euler step from configuration X^n is the
// minimization of
//
//   J(X) = 1/(2 tau) (X - X^n)^T D*_n (X - X^n) + E_h(X)
//
// over the admissible set {det F_e > 0 for all e}, with D*_n the dissipation
// operator assembled at X^n.  Any minimizer satisfies J(X^{n+1}) <= J(X^n),
// which is exactly the discrete energy-dissipation inequality
//
//   (E^{n+1} - E^n) / tau <= -1/(2 tau^2) (dX)^T D*_n (dX),
//
// so the step verifies that inequality before accepting.  The minimization
// uses damped Newton iterations on the free degrees of freedom; trial steps
// are halved until the iterate stays admissible and the merit decreases.
//
// When the energy density is undefined (law2 with 1 < alpha < 2) the same
// Newton loop runs on the optimality residual D*(X - X^n)/tau - dA/dX, with
// the residual norm as line-search merit; no energy bookkeeping is possible.

#include "lagdiff/dissipation.hpp"
#include "lagdiff/energy.hpp"
#include "lagdiff/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace lagdiff {

/// Error raised when a time step cannot be completed (Newton failure or a
/// violated energy inequality that a damped retry did not cure).
struct step_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BoundaryMode {
  free_support,     ///< all nodes move; the mesh boundary is the free boundary
  pinned_boundary,  ///< boundary nodes are fixed (no-flux box)
};

enum class Integrator { backward_euler, explicit_euler };

struct NewtonOptions {
  double tol = 1e-10;        ///< stop when the free-dof residual drops below this
  int max_iterations = 50;
  double damping = 1.0;      ///< initial trial step length
  double min_damping = 9.5367431640625e-07;  ///< 2^-20; reaching it is a failure
};

struct StepReport {
  int newton_iterations = 0;
  double residual = 0.0;       ///< infinity norm of the free-dof optimality residual
  double energy_before = std::numeric_limits<double>::quiet_NaN();
  double energy_after = std::numeric_limits<double>::quiet_NaN();
  double dissipation = 0.0;    ///< 1/(2 tau^2) (dX)^T D*_n (dX)
  double margin = 0.0;         ///< min_e det F_e at the new configuration
  bool accepted = false;
};

/// Degrees of freedom that the stepper may move.  Pinning acts on whole
/// nodes: both coordinates of a pinned node stay put.
template <int D>
std::vector<int> free_dof_indices(const Triangulation<D>& mesh, BoundaryMode mode) {
  std::vector<int> free;
  const int n = mesh.n_nodes();
  free.reserve(D * n);
  for (int c = 0; c < D; ++c)
    for (int i = 0; i < n; ++i)
      if (mode == BoundaryMode::free_support || !mesh.boundary_node[i])
        free.push_back(c * n + i);
  if (free.empty()) throw std::invalid_argument("free_dof_indices: every node is pinned");
  return free;
}

// ---------------------------------------------------------------------------
// Generic damped Newton on a restricted index set.

struct NewtonCallbacks {
  /// Line-search merit (objective value, or residual norm in formal mode).
  std::function<double(const Eigen::VectorXd&)> merit;
  /// Full-size optimality residual; only the free entries are driven to zero.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  /// Full-size second derivative of the merit's smooth model.
  std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)> hessian;
  /// Hard feasibility guard (admissibility); trial states failing it are halved.
  std::function<bool(const Eigen::VectorXd&)> feasible;
};

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
};

inline NewtonResult newton_minimize(const NewtonCallbacks& cb, Eigen::VectorXd x,
                                    const std::vector<int>& free_idx,
                                    const NewtonOptions& opt = {}) {
  const int nf = static_cast<int>(free_idx.size());
  std::vector<int> full2red(x.size(), -1);
  for (int k = 0; k < nf; ++k) full2red[free_idx[k]] = k;

  auto reduced_norm = [&](const Eigen::VectorXd& g) {
    double m = 0.0;
    for (int idx : free_idx) m = std::max(m, std::abs(g[idx]));
    return m;
  };

  double merit = cb.merit(x);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd g = cb.gradient(x);
    const double gnorm = reduced_norm(g);
    if (gnorm <= opt.tol) return {x, it, gnorm};

    Eigen::SparseMatrix<double> H = cb.hessian(x);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(H.nonZeros());
    for (int k = 0; k < H.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itH(H, k); itH; ++itH) {
        const int r = full2red[itH.row()], c = full2red[itH.col()];
        if (r >= 0 && c >= 0) trip.emplace_back(r, c, itH.value());
      }
    Eigen::SparseMatrix<double> Hr(nf, nf);
    Hr.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Hr);
    if (ldlt.info() != Eigen::Success)
      throw step_error("newton: Hessian factorization failed at iteration " +
                       std::to_string(it));
    Eigen::VectorXd gr(nf);
    for (int k = 0; k < nf; ++k) gr[k] = g[free_idx[k]];
    const Eigen::VectorXd dr = ldlt.solve(-gr);

    double s = opt.damping;
    bool moved = false;
    while (s >= opt.min_damping) {
      Eigen::VectorXd trial = x;
      for (int k = 0; k < nf; ++k) trial[free_idx[k]] += s * dr[k];
      if (cb.feasible(trial)) {
        const double trial_merit = cb.merit(trial);
        // Near the optimum the merit decrease sinks below round-off; a clear
        // drop of the residual then certifies progress instead.
        const bool merit_ok = trial_merit <= merit + 1e-14 * (1.0 + std::abs(merit));
        if (merit_ok || reduced_norm(cb.gradient(trial)) <= 0.9 * gnorm) {
          x = std::move(trial);
          merit = trial_merit;
          moved = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!moved)
      throw step_error("newton: no admissible decrease found at iteration " +
                       std::to_string(it) + " (residual " + std::to_string(gnorm) + ")");
  }
  Eigen::VectorXd g = cb.gradient(x);
  const double gnorm = reduced_norm(g);
  if (gnorm <= opt.tol) return {x, opt.max_iterations, gnorm};
  throw step_error("newton: not converged after " + std::to_string(opt.max_iterations) +
                   " iterations (residual " + std::to_string(gnorm) + ")");
}

// ---------------------------------------------------------------------------
// Backward Euler

namespace detail {

/// H_E + blockdiag(M)/tau as one sparse matrix.
template <int D>
Eigen::SparseMatrix<double> step_hessian(const Triangulation<D>& mesh,
                                         const std::vector<double>& rho0_c,
                                         const Configuration<D>& cfg, const EnergyLaw& law,
                                         const Eigen::SparseMatrix<double>& M, double tau) {
  Eigen::SparseMatrix<double> H = energy_hessian(mesh, rho0_c, cfg, law);
  const int n = mesh.n_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(H.nonZeros() + D * M.nonZeros());
  for (int k = 0; k < H.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it)
      for (int c = 0; c < D; ++c)
        trip.emplace_back(c * n + it.row(), c * n + it.col(), it.value() / tau);
  Eigen::SparseMatrix<double> out(D * n, D * n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace detail

template <int D>
StepReport step_backward_euler(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                               const EnergyLaw& law, Configuration<D>& cfg, double tau,
                               const std::vector<int>& free_idx,
                               const NewtonOptions& opt = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("step_backward_euler: tau must be positive");
  const DissipationOperator<D> diss(mesh, rho0_c, cfg, law);
  const Eigen::VectorXd xn = cfg.dof;
  const int n = cfg.n;

  auto as_cfg = [n](const Eigen::VectorXd& dof) { return Configuration<D>{dof, n}; };
  auto feasible = [&](const Eigen::VectorXd& dof) {
    return is_admissible(mesh, as_cfg(dof));
  };
  auto gradient = [&](const Eigen::VectorXd& dof) -> Eigen::VectorXd {
    return diss.apply(dof - xn) / tau - action_gradient(mesh, rho0_c, as_cfg(dof), law);
  };
  auto hessian = [&](const Eigen::VectorXd& dof) {
    return detail::step_hessian(mesh, rho0_c, as_cfg(dof), law, diss.scalar_block(), tau);
  };

  NewtonCallbacks cb{{}, gradient, hessian, feasible};
  const bool formal = law.formal();
  if (formal) {
    std::vector<int> free_copy = free_idx;  // captured by value below
    cb.merit = [&, free_copy](const Eigen::VectorXd& dof) {
      Eigen::VectorXd g = gradient(dof);
      double m = 0.0;
      for (int idx : free_copy) m = std::max(m, std::abs(g[idx]));
      return m;
    };
  } else {
    cb.merit = [&](const Eigen::VectorXd& dof) {
      const Eigen::VectorXd d = dof - xn;
      return 0.5 / tau * diss.quadratic(d) + discrete_energy(mesh, rho0_c, as_cfg(dof), law);
    };
  }

  StepReport rep;
  if (!formal) rep.energy_before = discrete_energy(mesh, rho0_c, cfg, law);

  auto attempt = [&](double damping) {
    NewtonOptions o = opt;
    o.damping = damping;
    NewtonResult res = newton_minimize(cb, xn, free_idx, o);
    rep.newton_iterations = res.iterations;
    rep.residual = res.residual;
    rep.margin = admissibility_margin(mesh, as_cfg(res.x));
    const Eigen::VectorXd d = res.x - xn;
    rep.dissipation = diss.quadratic(d) / (2.0 * tau * tau);
    if (!formal) rep.energy_after = discrete_energy(mesh, rho0_c, as_cfg(res.x), law);
    return res.x;
  };

  Eigen::VectorXd x = attempt(opt.damping);
  const double slack = 1e-9 * std::max(1.0, std::abs(rep.energy_before));
  bool inequality_ok =
      formal || rep.energy_after - rep.energy_before <= -tau * rep.dissipation + slack;
  if (!inequality_ok) {
    x = attempt(0.5 * opt.damping);  // one damped retry
    inequality_ok = rep.energy_after - rep.energy_before <= -tau * rep.dissipation + slack;
    if (!inequality_ok)
      throw step_error("step: energy-dissipation inequality violated (dE = " +
                       std::to_string(rep.energy_after - rep.energy_before) + ", bound " +
                       std::to_string(-tau * rep.dissipation) + ")");
  }
  rep.accepted = rep.margin > 0.0;
  cfg.dof = x;
  return rep;
}

// ---------------------------------------------------------------------------
// Explicit Euler: D*_n (X^{n+1} - X^n) / tau = dA/dX (X^n).  No stability
// guarantee; the report flags inadmissible or energy-increasing outcomes.

template <int D>
StepReport step_explicit_euler(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                               const EnergyLaw& law, Configuration<D>& cfg, double tau,
                               const std::vector<int>& free_idx) {
  if (!(tau > 0.0)) throw std::invalid_argument("step_explicit_euler: tau must be positive");
  if (law.formal())
    throw std::logic_error("step_explicit_euler: formal mode requires the implicit stepper");
  const int n = cfg.n;
  const DissipationOperator<D> diss(mesh, rho0_c, cfg, law);
  const Eigen::VectorXd g = action_gradient(mesh, rho0_c, cfg, law);

  // Reduced mass solve on the free nodes, one coordinate block at a time.
  std::vector<int> node_map(n, -1);
  std::vector<int> free_nodes;
  for (int idx : free_idx)
    if (idx < n) {
      node_map[idx] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(idx);
    }
  const int nf = static_cast<int>(free_nodes.size());
  std::vector<Eigen::Triplet<double>> trip;
  const auto& M = diss.scalar_block();
  for (int k = 0; k < M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) {
      const int r = node_map[it.row()], c = node_map[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  Eigen::SparseMatrix<double> Mr(nf, nf);
  Mr.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Mr);
  if (ldlt.info() != Eigen::Success)
    throw solve_error("step_explicit_euler: mass factorization failed");

  StepReport rep;
  rep.energy_before = discrete_energy(mesh, rho0_c, cfg, law);
  Eigen::VectorXd x = cfg.dof;
  Eigen::VectorXd gr(nf), delta_full = Eigen::VectorXd::Zero(D * n);
  for (int c = 0; c < D; ++c) {
    for (int k = 0; k < nf; ++k) gr[k] = g[c * n + free_nodes[k]];
    Eigen::VectorXd v = ldlt.solve(gr);
    for (int k = 0; k < nf; ++k) delta_full[c * n + free_nodes[k]] = tau * v[k];
  }
  x += delta_full;
  rep.dissipation = diss.quadratic(delta_full) / (2.0 * tau * tau);
  rep.newton_iterations = 0;
  rep.margin = admissibility_margin(mesh, Configuration<D>{x, n});
  if (rep.margin <= 0.0) {
    rep.accepted = false;  // keep the previous configuration; nothing sane to store
    return rep;
  }
  cfg.dof = x;
  rep.energy_after = discrete_energy(mesh, rho0_c, cfg, law);
  Eigen::VectorXd res = diss.apply(delta_full) / tau - g;
  double rnorm = 0.0;
  for (int idx : free_idx) rnorm = std::max(rnorm, std::abs(res[idx]));
  rep.residual = rnorm;
  rep.accepted = rep.energy_after <= rep.energy_before + 1e-12 * std::max(1.0, std::abs(rep.energy_before));
  return rep;
}

// ---------------------------------------------------------------------------
// Time loop

struct RunRecord {
  int step = 0;
  double t = 0.0;
  StepReport report;
};

template <int D>
struct RunResult {
  Configuration<D> final_configuration;
  std::vector<RunRecord> steps;
  bool completed = true;
  std::string error;
};

/// Advances cfg0 to time T in steps of tau.  The callback fires after every
/// accepted step as callback(step_index, t, cfg, report); a failing step
/// stops the run and returns the trajectory so far with completed = false.
template <int D, class Callback>
RunResult<D> run(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                 const EnergyLaw& law, const Configuration<D>& cfg0, double tau, double T,
                 BoundaryMode mode, Integrator integrator, const NewtonOptions& opt,
                 Callback&& callback) {
  if (!(tau > 0.0)) throw std::invalid_argument("run: tau must be positive");
  if (T < 0.0) throw std::invalid_argument("run: T must be non-negative");
  RunResult<D> out;
  out.final_configuration = cfg0;
  const auto free_idx = free_dof_indices(mesh, mode);

  long n_steps = std::lround(T / tau);
  bool uneven_tail = std::abs(n_steps * tau - T) > 1e-9 * std::max(1.0, T);
  if (uneven_tail) n_steps = static_cast<long>(std::ceil(T / tau - 1e-12));

  for (long k = 1; k <= n_steps; ++k) {
    const double step_tau =
        (uneven_tail && k == n_steps) ? T - (n_steps - 1) * tau : tau;
    const double t = (uneven_tail && k == n_steps) ? T : k * tau;
    StepReport rep;
    try {
      rep = integrator == Integrator::backward_euler
                ? step_backward_euler(mesh, rho0_c, law, out.final_configuration, step_tau,
                                      free_idx, opt)
                : step_explicit_euler(mesh, rho0_c, law, out.final_configuration, step_tau,
                                      free_idx);
    } catch (const std::runtime_error& err) {
      out.completed = false;
      out.error = "step " + std::to_string(k) + ": " + err.what();
      return out;
    }
    out.steps.push_back({static_cast<int>(k), t, rep});
    callback(static_cast<int>(k), t, out.final_configuration, rep);
    if (!rep.accepted) {
      out.completed = false;
      out.error = "step " + std::to_string(k) + ": step not accepted (margin " +
                  std::to_string(rep.margin) + ")";
      return out;
    }
  }
  return out;
}

}  // namespace lagdiff
