#pragma once

// Discrete free energy of a deformed configuration and its first two
// derivatives.  The density carried by element e is rho_e = rho0_e / det F_e
// (mass conservation along the flow map), with rho0_e sampled at the
// reference centroid, so the energy of a configuration is
//
//   E_h = sum_e omega(rho0_e / det F_e) det F_e |tau_e| .
//
// Two energy/dissipation pairings are supported:
//   law1: omega = rho^alpha / (alpha-1),         velocity weight eta = rho
//   law2: omega chosen so that eta = 1; for alpha = 2 omega = 2 rho ln rho,
//         for alpha > 2 omega = alpha rho^(alpha-1) / ((alpha-1)(alpha-2)).
// For 1 < alpha < 2 no admissible omega exists under law2; the scheme can
// still be stepped through its pressure form (see formal()), but energy
// values are refused.

#include "lagdiff/mesh.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lagdiff {

enum class Law {
  law1,  ///< dissipation (1/2) int rho |u|^2
  law2,  ///< dissipation (1/2) int |u|^2
};

struct EnergyLaw {
  Law law;
  double alpha;

  EnergyLaw(Law law_, double alpha_) : law(law_), alpha(alpha_) {
    if (!(alpha > 1.0)) throw std::invalid_argument("EnergyLaw: alpha must exceed 1");
  }

  /// True when the energy density is not defined (law2 with 1 < alpha < 2);
  /// pressure and its derivative remain available.
  bool formal() const { return law == Law::law2 && alpha < 2.0; }

  double omega(double rho) const {
    if (rho < 0.0) throw std::domain_error("omega: negative density");
    if (law == Law::law1) return std::pow(rho, alpha) / (alpha - 1.0);
    if (formal())
      throw std::logic_error("omega: not defined for law2 with 1 < alpha < 2 (formal mode)");
    if (alpha == 2.0) return rho > 0.0 ? 2.0 * rho * std::log(rho) : 0.0;
    return alpha * std::pow(rho, alpha - 1.0) / ((alpha - 1.0) * (alpha - 2.0));
  }

  /// Thermodynamic pressure p = omega'(rho) rho - omega(rho).  Both laws
  /// reduce to closed forms valid for every alpha > 1.
  double pressure(double rho) const {
    if (rho < 0.0) throw std::domain_error("pressure: negative density");
    if (law == Law::law1) return std::pow(rho, alpha);
    return alpha / (alpha - 1.0) * std::pow(rho, alpha - 1.0);
  }

  double pressure_rho(double rho) const {
    if (rho < 0.0) throw std::domain_error("pressure_rho: negative density");
    if (law == Law::law1) return alpha * std::pow(rho, alpha - 1.0);
    return alpha * std::pow(rho, alpha - 2.0);
  }

  /// Velocity weight in the dissipation functional.
  double eta(double rho) const {
    if (rho < 0.0) throw std::domain_error("eta: negative density");
    return law == Law::law1 ? rho : 1.0;
  }
};

/// Initial density sampled at the reference element centroids (one-point
/// quadrature of the energy integral).
template <int D, class Datum>
std::vector<double> sample_centroid_density(const Triangulation<D>& mesh, const Datum& rho0) {
  std::vector<double> out(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) out[e] = rho0(mesh.centroids[e]);
  return out;
}

template <int D>
void check_density_size(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                        const char* who) {
  if (static_cast<int>(rho0_c.size()) != mesh.n_elements())
    throw std::invalid_argument(std::string(who) + ": density vector size " +
                                std::to_string(rho0_c.size()) + " does not match " +
                                std::to_string(mesh.n_elements()) + " elements");
}

template <int D>
double discrete_energy(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                       const Configuration<D>& cfg, const EnergyLaw& law) {
  check_density_size(mesh, rho0_c, "discrete_energy");
  if (law.formal())
    throw std::logic_error("discrete_energy: not defined for law2 with 1 < alpha < 2");
  double E = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double s = det_F(mesh, cfg, e);
    if (s <= 0.0)
      throw admissibility_error("discrete_energy: element " + std::to_string(e) +
                                " has det F = " + std::to_string(s));
    if (rho0_c[e] <= 0.0) continue;  // vacuum elements carry no energy
    E += law.omega(rho0_c[e] / s) * s * mesh.measures[e];
  }
  return E;
}

namespace detail {

// d(det F)/dF is the cofactor matrix; contracting it with the hat-function
// gradient gives the derivative of det F with respect to a vertex position.
inline Vec<1> det_derivative(const Mat<1>&, const Vec<1>& g) { return g; }

inline Vec<2> det_derivative(const Mat<2>& F, const Vec<2>& g) {
  return Vec<2>(F(1, 1) * g[0] - F(1, 0) * g[1], F(0, 0) * g[1] - F(0, 1) * g[0]);
}

}  // namespace detail

/// Variation of the discrete action with respect to the nodal positions,
/// which is minus the gradient of the discrete energy:
///   dA/dx_{r,i} = sum_{e in patch(i)} p(rho_e) d(det F_e)/dx_{r,i} |tau_e| .
template <int D>
Eigen::VectorXd action_gradient(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                                const Configuration<D>& cfg, const EnergyLaw& law) {
  check_density_size(mesh, rho0_c, "action_gradient");
  const int n = mesh.n_nodes();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(D * n);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (rho0_c[e] <= 0.0) continue;
    const Mat<D> F = deformation_gradient(mesh, cfg, e);
    const double s = F.determinant();
    if (s <= 0.0)
      throw admissibility_error("action_gradient: element " + std::to_string(e) +
                                " has det F = " + std::to_string(s));
    const double coeff = law.pressure(rho0_c[e] / s) * mesh.measures[e];
    for (int l = 0; l <= D; ++l) {
      const Vec<D> ds = detail::det_derivative(F, mesh.grads[e][l]);
      for (int r = 0; r < D; ++r) g[r * n + mesh.elements[e][l]] += coeff * ds[r];
    }
  }
  return g;
}

/// Second derivative of the discrete energy.  Writing the element energy as
/// f(s) = omega(rho0/s) s |tau| with s = det F, the element Hessian is
///   f''(s) grad(s) grad(s)^T + f'(s) Hess(s),
/// where f'(s) = -p(rho) |tau| and f''(s) = rho p'(rho) / s |tau|, and
/// Hess(s) is nonzero only across coordinate blocks (det F is multilinear in
/// the rows of F).
template <int D>
Eigen::SparseMatrix<double> energy_hessian(const Triangulation<D>& mesh,
                                           const std::vector<double>& rho0_c,
                                           const Configuration<D>& cfg, const EnergyLaw& law) {
  check_density_size(mesh, rho0_c, "energy_hessian");
  const int n = mesh.n_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.n_elements() * (D + 1) * (D + 1) * D * D);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (rho0_c[e] <= 0.0) continue;
    const Mat<D> F = deformation_gradient(mesh, cfg, e);
    const double s = F.determinant();
    if (s <= 0.0)
      throw admissibility_error("energy_hessian: element " + std::to_string(e) +
                                " has det F = " + std::to_string(s));
    const double rho = rho0_c[e] / s;
    const double fpp = rho * law.pressure_rho(rho) / s * mesh.measures[e];
    const double fp = -law.pressure(rho) * mesh.measures[e];
    std::array<Vec<D>, D + 1> ds;
    for (int l = 0; l <= D; ++l) ds[l] = detail::det_derivative(F, mesh.grads[e][l]);
    for (int l = 0; l <= D; ++l)
      for (int m = 0; m <= D; ++m) {
        const int il = mesh.elements[e][l], im = mesh.elements[e][m];
        for (int r = 0; r < D; ++r)
          for (int c = 0; c < D; ++c) {
            double v = fpp * ds[l][r] * ds[m][c];
            if constexpr (D == 2) {
              // Hess(det F): d^2 s / d x_l d y_m = c_l d_m - d_l c_m.
              const Vec<2>&gl = mesh.grads[e][l], &gm = mesh.grads[e][m];
              if (r == 0 && c == 1) v += fp * (gl[0] * gm[1] - gl[1] * gm[0]);
              if (r == 1 && c == 0) v += fp * (gm[0] * gl[1] - gm[1] * gl[0]);
            }
            if (v != 0.0) trip.emplace_back(r * n + il, c * n + im, v);
          }
      }
  }
  Eigen::SparseMatrix<double> H(D * n, D * n);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

}  // namespace lagdiff
