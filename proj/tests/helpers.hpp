#pragma once

// Shared fixtures for the test suite: deterministic randomly perturbed
// admissible configurations and central finite differences used as oracles
// for the analytic derivatives.

#include "lagdiff/mesh.hpp"

#include <Eigen/Dense>

#include <functional>
#include <random>

namespace testutil {

template <int D>
lagdiff::Configuration<D> jittered_configuration(const lagdiff::Triangulation<D>& mesh,
                                                 double amplitude, unsigned seed) {
  auto cfg = lagdiff::Configuration<D>::identity(mesh);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-amplitude, amplitude);
  for (int k = 0; k < cfg.dof.size(); ++k) cfg.dof[k] += unif(rng);
  if (!lagdiff::is_admissible(mesh, cfg))
    throw std::runtime_error("jittered_configuration: amplitude too large for this mesh");
  return cfg;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
    double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    x[j] = xj + h;
    const Eigen::VectorXd fp = f(x);
    x[j] = xj - h;
    const Eigen::VectorXd fm = f(x);
    x[j] = xj;
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

}  // namespace testutil
