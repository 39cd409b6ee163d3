#pragma once

// Closed-form 1D implementation of both schemes.  On a segment chain the
// deformation gradient of element i is the gap ratio (a_{i+1} - a_i) / h_i,
// so the backward-Euler optimality system collapses to a tridiagonal Newton
// solve
//
//   sum_j M_ij (a_j - a_j^n) / tau + Phi_i(a) = 0,
//
// where Phi_i is the pressure difference across node i:
//   law1: Phi_i = (rho_i h_i / g_i)^alpha - (rho_{i-1} h_{i-1} / g_{i-1})^alpha
//   law2: the same with exponent alpha - 1 and prefactor alpha/(alpha-1),
// with g_i = a_{i+1} - a_i and rho_i the initial density at the reference
// midpoint of element i.  Terms that would reach outside the chain are
// dropped (the boundary node only feels the pressure of its single element).
//
// Everything here is deliberately self-contained -- plain vectors and a
// Thomas solve -- so it can serve as an independent cross-check for the
// general assembly/solver path.

#include "lagdiff/energy.hpp"  // Law, EnergyLaw validation
#include "lagdiff/solver.hpp"  // step_error, NewtonOptions

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lagdiff::pme1d {

struct Grid {
  std::vector<double> X;        ///< reference nodes, ascending
  std::vector<double> h;        ///< element widths (size N-1)
  std::vector<double> rho_mid;  ///< initial density at element midpoints
};

template <class Datum>
Grid make_grid(const std::vector<double>& nodes, const Datum& rho0) {
  if (nodes.size() < 2) throw std::invalid_argument("pme1d: need at least two nodes");
  Grid g;
  g.X = nodes;
  g.h.resize(nodes.size() - 1);
  g.rho_mid.resize(nodes.size() - 1);
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    g.h[i] = nodes[i + 1] - nodes[i];
    if (!(g.h[i] > 0.0)) throw std::invalid_argument("pme1d: nodes must be strictly increasing");
    g.rho_mid[i] = rho0(0.5 * (nodes[i] + nodes[i + 1]));
    if (g.rho_mid[i] < 0.0) throw std::invalid_argument("pme1d: negative density");
  }
  return g;
}

struct Tridiagonal {
  std::vector<double> lower, diag, upper;  // lower[i] multiplies a_{i-1} in row i
};

/// Mobility matrix: law1 weights the segment mass matrix with the reference
/// midpoint density (time independent); law2 uses the deformed gaps of the
/// previous configuration.
inline Tridiagonal mobility(const Grid& grid, Law law, const std::vector<double>& a) {
  const size_t n = grid.X.size();
  if (a.size() != n) throw std::invalid_argument("pme1d mobility: bad state size");
  Tridiagonal M{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                std::vector<double>(n, 0.0)};
  for (size_t e = 0; e + 1 < n; ++e) {
    const double w = law == Law::law1 ? grid.rho_mid[e] * grid.h[e] : a[e + 1] - a[e];
    M.diag[e] += w / 3.0;
    M.diag[e + 1] += w / 3.0;
    M.upper[e] += w / 6.0;
    M.lower[e + 1] += w / 6.0;
  }
  return M;
}

/// Pressure difference Phi(a) felt by each node.  The verbatim flag divides
/// both density ratios in a row by the same left gap a_i - a_{i-1} (a variant
/// that appears in print for law2); the boundary rows, where that expression
/// has no meaning, always use their own gap.
inline std::vector<double> pressure_jump(const Grid& grid, Law law, double alpha,
                                         const std::vector<double>& a, bool verbatim = false) {
  const size_t n = grid.X.size();
  if (a.size() != n) throw std::invalid_argument("pme1d pressure_jump: bad state size");
  if (!(alpha > 1.0)) throw std::invalid_argument("pme1d: alpha must exceed 1");
  const double expo = law == Law::law1 ? alpha : alpha - 1.0;
  const double pref = law == Law::law1 ? 1.0 : alpha / (alpha - 1.0);
  auto term = [&](size_t e, double gap) {
    if (!(gap > 0.0))
      throw admissibility_error("pme1d: element " + std::to_string(e) + " has gap " +
                                std::to_string(gap));
    return pref * std::pow(grid.rho_mid[e] * grid.h[e] / gap, expo);
  };
  std::vector<double> phi(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const bool interior = i > 0 && i + 1 < n;
    if (i + 1 < n) {  // element to the right
      const double gap = (verbatim && interior) ? a[i] - a[i - 1] : a[i + 1] - a[i];
      phi[i] += term(i, gap);
    }
    if (i > 0) {  // element to the left
      const double gap = a[i] - a[i - 1];
      phi[i] -= term(i - 1, gap);
    }
  }
  return phi;
}

/// Backward-Euler residual M(a^n)(a - a^n)/tau + Phi(a).
inline std::vector<double> residual(const Grid& grid, Law law, double alpha,
                                    const std::vector<double>& a_prev,
                                    const std::vector<double>& a, double tau,
                                    bool verbatim = false) {
  if (!(tau > 0.0)) throw std::invalid_argument("pme1d residual: tau must be positive");
  const size_t n = grid.X.size();
  if (a_prev.size() != n || a.size() != n)
    throw std::invalid_argument("pme1d residual: bad state size");
  const Tridiagonal M = mobility(grid, law, a_prev);
  std::vector<double> r = pressure_jump(grid, law, alpha, a, verbatim);
  for (size_t i = 0; i < n; ++i) {
    double acc = M.diag[i] * (a[i] - a_prev[i]);
    if (i > 0) acc += M.lower[i] * (a[i - 1] - a_prev[i - 1]);
    if (i + 1 < n) acc += M.upper[i] * (a[i + 1] - a_prev[i + 1]);
    r[i] += acc / tau;
  }
  return r;
}

namespace detail {

/// d Phi / d a as a tridiagonal matrix.
inline Tridiagonal pressure_jump_jacobian(const Grid& grid, Law law, double alpha,
                                          const std::vector<double>& a, bool verbatim) {
  const size_t n = grid.X.size();
  const double expo = law == Law::law1 ? alpha : alpha - 1.0;
  const double pref = law == Law::law1 ? 1.0 : alpha / (alpha - 1.0);
  Tridiagonal J{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                std::vector<double>(n, 0.0)};
  // d/d(gap) of pref (c/gap)^expo is -pref expo c^expo gap^(-expo-1).
  auto dterm = [&](size_t e, double gap) {
    const double c = grid.rho_mid[e] * grid.h[e];
    return -pref * expo * std::pow(c, expo) * std::pow(gap, -expo - 1.0);
  };
  for (size_t i = 0; i < n; ++i) {
    const bool interior = i > 0 && i + 1 < n;
    if (i + 1 < n) {
      if (verbatim && interior) {
        const double d = dterm(i, a[i] - a[i - 1]);
        J.diag[i] += d;
        J.lower[i] -= d;
      } else {
        const double d = dterm(i, a[i + 1] - a[i]);
        J.upper[i] += d;
        J.diag[i] -= d;
      }
    }
    if (i > 0) {
      const double d = dterm(i - 1, a[i] - a[i - 1]);
      J.diag[i] -= d;
      J.lower[i] += d;
    }
  }
  return J;
}

inline std::vector<double> thomas_solve(Tridiagonal A, std::vector<double> rhs) {
  const size_t n = rhs.size();
  for (size_t i = 1; i < n; ++i) {
    const double w = A.lower[i] / A.diag[i - 1];
    A.diag[i] -= w * A.upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / A.diag[n - 1];
  for (size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - A.upper[i] * x[i + 1]) / A.diag[i];
  return x;
}

}  // namespace detail

/// One backward-Euler step by damped Newton on the tridiagonal system.
inline std::vector<double> step(const Grid& grid, Law law, double alpha,
                                const std::vector<double>& a_prev, double tau,
                                bool verbatim = false, const NewtonOptions& opt = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("pme1d step: tau must be positive");
  const size_t n = grid.X.size();
  const Tridiagonal M = mobility(grid, law, a_prev);

  auto ordered = [&](const std::vector<double>& a) {
    for (size_t i = 0; i + 1 < n; ++i)
      if (!(a[i + 1] > a[i])) return false;
    return true;
  };
  auto norm_inf = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  auto eval_residual = [&](const std::vector<double>& a) {
    std::vector<double> r = pressure_jump(grid, law, alpha, a, verbatim);
    for (size_t i = 0; i < n; ++i) {
      double acc = M.diag[i] * (a[i] - a_prev[i]);
      if (i > 0) acc += M.lower[i] * (a[i - 1] - a_prev[i - 1]);
      if (i + 1 < n) acc += M.upper[i] * (a[i + 1] - a_prev[i + 1]);
      r[i] += acc / tau;
    }
    return r;
  };

  std::vector<double> a = a_prev;
  std::vector<double> r = eval_residual(a);
  double rnorm = norm_inf(r);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (rnorm <= opt.tol) return a;
    Tridiagonal J = detail::pressure_jump_jacobian(grid, law, alpha, a, verbatim);
    for (size_t i = 0; i < n; ++i) {
      J.diag[i] += M.diag[i] / tau;
      J.lower[i] += M.lower[i] / tau;
      J.upper[i] += M.upper[i] / tau;
    }
    std::vector<double> neg_r(n);
    for (size_t i = 0; i < n; ++i) neg_r[i] = -r[i];
    const std::vector<double> delta = detail::thomas_solve(J, neg_r);

    double s = opt.damping;
    bool moved = false;
    while (s >= opt.min_damping) {
      std::vector<double> trial = a;
      for (size_t i = 0; i < n; ++i) trial[i] += s * delta[i];
      if (ordered(trial)) {
        std::vector<double> rt = eval_residual(trial);
        const double tn = norm_inf(rt);
        if (tn <= rnorm * (1.0 + 1e-14) || tn <= opt.tol) {
          a = std::move(trial);
          r = std::move(rt);
          rnorm = tn;
          moved = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!moved)
      throw step_error("pme1d: no admissible residual decrease (residual " +
                       std::to_string(rnorm) + ")");
  }
  if (rnorm <= opt.tol) return a;
  throw step_error("pme1d: not converged after " + std::to_string(opt.max_iterations) +
                   " iterations (residual " + std::to_string(rnorm) + ")");
}

}  // namespace lagdiff::pme1d
