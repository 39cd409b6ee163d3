#pragma once

// Mobility (dissipation) operator D* = blockdiag(M, ..., M) pairing nodal
// velocities: under law1 the velocity is weighted by the transported density,
//   M_ij = sum_e rho0_e int_tau phi_i phi_j dX        (time independent),
// under law2 the weight is 1 on the deformed domain,
//   M_ij = sum_e det F_e^n int_tau phi_i phi_j dX     (reassembled each step).
// The hat-function products are integrated exactly on each simplex,
//   int_tau phi_l phi_m dX = |tau| (1 + delta_lm) / ((D+1)(D+2)),
// while the weights are element constants (centroid density, det F).

#include "lagdiff/energy.hpp"
#include "lagdiff/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <stdexcept>
#include <string>
#include <vector>

namespace lagdiff {

/// Error raised when the mobility matrix cannot be factored or a solve does
/// not meet the residual contract.
struct solve_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <int D>
Eigen::SparseMatrix<double> assemble_mobility(const Triangulation<D>& mesh,
                                              const std::vector<double>& rho0_c,
                                              const Configuration<D>& cfg, const EnergyLaw& law) {
  check_density_size(mesh, rho0_c, "assemble_mobility");
  const int n = mesh.n_nodes();
  const double diag = 2.0 / ((D + 1.0) * (D + 2.0));
  const double off = 1.0 / ((D + 1.0) * (D + 2.0));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.n_elements() * (D + 1) * (D + 1));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    double weight;
    if (law.law == Law::law1) {
      weight = rho0_c[e];
    } else {
      weight = det_F(mesh, cfg, e);
      if (weight <= 0.0)
        throw admissibility_error("assemble_mobility: element " + std::to_string(e) +
                                  " has det F = " + std::to_string(weight));
    }
    if (weight == 0.0) continue;
    const double scale = weight * mesh.measures[e];
    const auto& el = mesh.elements[e];
    for (int l = 0; l <= D; ++l)
      for (int m = 0; m <= D; ++m)
        trip.emplace_back(el[l], el[m], scale * (l == m ? diag : off));
  }
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// Assembled and factored dissipation operator acting blockwise on stacked
/// coordinate vectors of size D * n_nodes.
template <int D>
class DissipationOperator {
 public:
  DissipationOperator(const Triangulation<D>& mesh, const std::vector<double>& rho0_c,
                      const Configuration<D>& cfg, const EnergyLaw& law)
      : n_(mesh.n_nodes()), M_(assemble_mobility(mesh, rho0_c, cfg, law)) {
    for (int i = 0; i < n_; ++i)
      if (M_.coeff(i, i) == 0.0)
        throw solve_error("dissipation: singular row for node " + std::to_string(i) +
                          " (no mass in its patch)");
    ldlt_.compute(M_);
    if (ldlt_.info() != Eigen::Success)
      throw solve_error("dissipation: mobility factorization failed");
    if (ldlt_.vectorD().minCoeff() <= 0.0)
      throw solve_error("dissipation: mobility matrix is not positive definite (smallest pivot " +
                        std::to_string(ldlt_.vectorD().minCoeff()) + ")");
  }

  int n_nodes() const { return n_; }
  const Eigen::SparseMatrix<double>& scalar_block() const { return M_; }

  /// D* v for a stacked coordinate vector v.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    check_size(v, "apply");
    Eigen::VectorXd out(v.size());
    for (int c = 0; c < D; ++c) out.segment(c * n_, n_) = M_ * v.segment(c * n_, n_);
    return out;
  }

  /// v^T D* v (twice the dissipation of the velocity v times the step size).
  double quadratic(const Eigen::VectorXd& v) const { return v.dot(apply(v)); }

  /// Solves D* x = rhs blockwise and enforces the residual contract.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    check_size(rhs, "solve");
    Eigen::VectorXd x(rhs.size());
    for (int c = 0; c < D; ++c) x.segment(c * n_, n_) = ldlt_.solve(rhs.segment(c * n_, n_));
    const double scale = rhs.lpNorm<Eigen::Infinity>();
    if (scale > 0.0) {
      const Eigen::VectorXd defect = apply(x) - rhs;
      const double res = defect.lpNorm<Eigen::Infinity>() / scale;
      if (!(res <= 1e-12))
        throw solve_error("dissipation: solve residual " + std::to_string(res) +
                          " exceeds 1e-12");
    }
    return x;
  }

 private:
  void check_size(const Eigen::VectorXd& v, const char* who) const {
    if (v.size() != static_cast<Eigen::Index>(D) * n_)
      throw std::invalid_argument(std::string("dissipation ") + who + ": vector size " +
                                  std::to_string(v.size()) + " != " + std::to_string(D * n_));
  }

  int n_;
  Eigen::SparseMatrix<double> M_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace lagdiff
