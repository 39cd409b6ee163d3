#include "lagdiff/energy.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>

using namespace lagdiff;

namespace {

double smooth_density_1d(const Vec<1>& X) { return 0.5 + 0.3 * std::sin(2.0 * X[0]); }
double smooth_density_2d(const Vec<2>& X) {
  return 0.6 + 0.25 * std::sin(3.0 * X[0]) * std::cos(2.0 * X[1]);
}

}  // namespace

TEST_CASE("pressure closed forms") {
  CHECK(EnergyLaw(Law::law1, 2.0).pressure(2.0) == Catch::Approx(4.0));
  CHECK(EnergyLaw(Law::law1, 4.0).pressure(1.5) == Catch::Approx(5.0625));
  CHECK(EnergyLaw(Law::law2, 3.0).pressure(2.0) == Catch::Approx(6.0));
  CHECK(EnergyLaw(Law::law2, 2.0).pressure(0.7) == Catch::Approx(1.4));
  CHECK(EnergyLaw(Law::law1, 3.0).pressure(0.0) == 0.0);
  CHECK(EnergyLaw(Law::law2, 3.0).pressure(0.0) == 0.0);
}

TEST_CASE("omega closed forms") {
  CHECK(EnergyLaw(Law::law1, 2.0).omega(3.0) == Catch::Approx(9.0));
  CHECK(EnergyLaw(Law::law1, 4.0).omega(2.0) == Catch::Approx(16.0 / 3.0));
  CHECK(EnergyLaw(Law::law2, 2.0).omega(3.0) == Catch::Approx(6.0 * std::log(3.0)));
  CHECK(EnergyLaw(Law::law2, 2.0).omega(0.0) == 0.0);
  CHECK(EnergyLaw(Law::law2, 4.0).omega(2.0) == Catch::Approx(4.0 * 8.0 / 6.0));
}

TEST_CASE("pressure is omega' rho - omega for both laws") {
  const double h = 1e-6;
  for (Law law : {Law::law1, Law::law2})
    for (double alpha : {2.0, 3.0, 4.5})
      for (double rho : {0.3, 1.0, 2.7}) {
        EnergyLaw el(law, alpha);
        double omega_rho = (el.omega(rho + h) - el.omega(rho - h)) / (2.0 * h);
        CHECK(el.pressure(rho) == Catch::Approx(omega_rho * rho - el.omega(rho)).epsilon(1e-8));
        double p_rho = (el.pressure(rho + h) - el.pressure(rho - h)) / (2.0 * h);
        CHECK(el.pressure_rho(rho) == Catch::Approx(p_rho).epsilon(1e-8));
      }
}

TEST_CASE("dissipation weight") {
  CHECK(EnergyLaw(Law::law1, 3.0).eta(0.42) == Catch::Approx(0.42));
  CHECK(EnergyLaw(Law::law2, 3.0).eta(0.42) == 1.0);
}

TEST_CASE("formal mode: pressure available, energy refused") {
  EnergyLaw el(Law::law2, 1.5);
  CHECK(el.formal());
  CHECK(el.pressure(4.0) == Catch::Approx(3.0 * 2.0));  // 1.5/0.5 * rho^0.5
  CHECK_THROWS_AS(el.omega(1.0), std::logic_error);
  CHECK_FALSE(EnergyLaw(Law::law2, 2.0).formal());
  CHECK_FALSE(EnergyLaw(Law::law1, 1.5).formal());

  auto mesh = build_interval(0.0, 1.0, 4);
  std::vector<double> rho0(mesh.n_elements(), 1.0);
  auto cfg = Configuration<1>::identity(mesh);
  CHECK_THROWS_AS(discrete_energy(mesh, rho0, cfg, el), std::logic_error);
  CHECK_NOTHROW(action_gradient(mesh, rho0, cfg, el));
}

TEST_CASE("negative density is rejected") {
  EnergyLaw el(Law::law1, 3.0);
  CHECK_THROWS_AS(el.omega(-0.1), std::domain_error);
  CHECK_THROWS_AS(el.pressure(-0.1), std::domain_error);
  CHECK_THROWS_AS(EnergyLaw(Law::law1, 1.0), std::invalid_argument);
}

TEST_CASE("single-element energies") {
  Triangulation<2> mesh;
  mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  mesh.elements = {{0, 1, 2}};
  mesh.finalize();
  std::vector<double> rho0 = {2.0};
  auto cfg = Configuration<2>::identity(mesh);
  EnergyLaw el(Law::law1, 2.0);

  // Identity: E = omega(2) * 1 * 0.5 = 4 * 0.5.
  CHECK(discrete_energy(mesh, rho0, cfg, el) == Catch::Approx(2.0));

  // Dilation x -> 2x: det F = 4, rho = 1/2, E = omega(1/2) * 4 * 0.5.
  cfg.dof *= 2.0;
  CHECK(discrete_energy(mesh, rho0, cfg, el) == Catch::Approx(0.25 * 4.0 * 0.5));

  // Vacuum element contributes nothing.
  CHECK(discrete_energy(mesh, {0.0}, cfg, el) == 0.0);

  // Reflected element raises an admissibility error naming the element.
  cfg.dof.segment(0, 3) *= -1.0;  // negate the x block only
  CHECK_THROWS_AS(discrete_energy(mesh, rho0, cfg, el), admissibility_error);
  CHECK_THROWS_WITH(discrete_energy(mesh, rho0, cfg, el),
                    Catch::Matchers::ContainsSubstring("element 0"));
}

TEST_CASE("energy size mismatch is caught") {
  auto mesh = build_interval(0.0, 1.0, 5);
  auto cfg = Configuration<1>::identity(mesh);
  std::vector<double> bad(3, 1.0);
  CHECK_THROWS_AS(discrete_energy(mesh, bad, cfg, EnergyLaw(Law::law1, 2.0)),
                  std::invalid_argument);
}

TEST_CASE("action gradient matches central differences") {
  const double fd_h = 1e-6, tol = 1e-6;

  SECTION("1D") {
    auto mesh = build_interval(-1.0, 1.0, 12);
    auto rho0 = sample_centroid_density(mesh, smooth_density_1d);
    auto cfg = testutil::jittered_configuration(mesh, 0.02, 11);
    for (Law law : {Law::law1, Law::law2})
      for (double alpha : {2.0, 3.0, 4.0}) {
        EnergyLaw el(law, alpha);
        auto g = action_gradient(mesh, rho0, cfg, el);
        auto E = [&](const Eigen::VectorXd& dof) {
          Configuration<1> c{dof, cfg.n};
          return discrete_energy(mesh, rho0, c, el);
        };
        Eigen::VectorXd fd = testutil::fd_gradient(E, cfg.dof, fd_h);
        const double scale = std::max(1.0, fd.template lpNorm<Eigen::Infinity>());
        CHECK((g + fd).template lpNorm<Eigen::Infinity>() / scale < tol);
      }
  }
  SECTION("2D") {
    auto mesh = build_square(-0.5, 0.5, 4);
    auto rho0 = sample_centroid_density(mesh, smooth_density_2d);
    auto cfg = testutil::jittered_configuration(mesh, 0.02, 23);
    for (Law law : {Law::law1, Law::law2})
      for (double alpha : {2.0, 3.0, 4.0}) {
        EnergyLaw el(law, alpha);
        auto g = action_gradient(mesh, rho0, cfg, el);
        auto E = [&](const Eigen::VectorXd& dof) {
          Configuration<2> c{dof, cfg.n};
          return discrete_energy(mesh, rho0, c, el);
        };
        Eigen::VectorXd fd = testutil::fd_gradient(E, cfg.dof, fd_h);
        const double scale = std::max(1.0, fd.template lpNorm<Eigen::Infinity>());
        CHECK((g + fd).template lpNorm<Eigen::Infinity>() / scale < tol);
      }
  }
}

TEST_CASE("gradient blocks sum to zero (translation invariance)") {
  auto mesh = build_square(0.0, 1.0, 3);
  auto rho0 = sample_centroid_density(mesh, smooth_density_2d);
  auto cfg = testutil::jittered_configuration(mesh, 0.03, 5);
  auto g = action_gradient(mesh, rho0, cfg, EnergyLaw(Law::law2, 3.0));
  const int n = mesh.n_nodes();
  CHECK(std::abs(g.segment(0, n).sum()) < 1e-12);
  CHECK(std::abs(g.segment(n, n).sum()) < 1e-12);
}

TEST_CASE("uniform state: interior gradient rows vanish") {
  // At the identity every element carries the same pressure, so the force on
  // an interior node is p times the derivative of its patch area, which is
  // zero; only boundary nodes are pushed (outwards).
  auto mesh = build_square(0.0, 1.0, 3);
  std::vector<double> rho0(mesh.n_elements(), 0.8);
  auto cfg = Configuration<2>::identity(mesh);
  auto g = action_gradient(mesh, rho0, cfg, EnergyLaw(Law::law1, 3.0));
  const int n = mesh.n_nodes();
  bool some_boundary_nonzero = false;
  for (int i = 0; i < n; ++i) {
    double row = std::hypot(g[i], g[n + i]);
    if (mesh.boundary_node[i])
      some_boundary_nonzero |= row > 1e-8;
    else
      CHECK(row < 1e-12);
  }
  CHECK(some_boundary_nonzero);
}

TEST_CASE("energy hessian matches differentiated gradient") {
  const double fd_h = 1e-6;

  SECTION("1D") {
    auto mesh = build_interval(0.0, 2.0, 9);
    auto rho0 = sample_centroid_density(mesh, smooth_density_1d);
    auto cfg = testutil::jittered_configuration(mesh, 0.02, 3);
    for (Law law : {Law::law1, Law::law2}) {
      EnergyLaw el(law, 4.0);
      Eigen::MatrixXd H = Eigen::MatrixXd(energy_hessian(mesh, rho0, cfg, el));
      auto grad_e = [&](const Eigen::VectorXd& dof) -> Eigen::VectorXd {
        Configuration<1> c{dof, cfg.n};
        return -action_gradient(mesh, rho0, c, el);
      };
      Eigen::MatrixXd fd = testutil::fd_jacobian(grad_e, cfg.dof, fd_h);
      CHECK((H - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-5);
      CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SECTION("2D") {
    auto mesh = build_square(-0.5, 0.5, 3);
    auto rho0 = sample_centroid_density(mesh, smooth_density_2d);
    auto cfg = testutil::jittered_configuration(mesh, 0.02, 29);
    for (Law law : {Law::law1, Law::law2})
      for (double alpha : {2.0, 4.0}) {
        EnergyLaw el(law, alpha);
        Eigen::MatrixXd H = Eigen::MatrixXd(energy_hessian(mesh, rho0, cfg, el));
        auto grad_e = [&](const Eigen::VectorXd& dof) -> Eigen::VectorXd {
          Configuration<2> c{dof, cfg.n};
          return -action_gradient(mesh, rho0, c, el);
        };
        Eigen::MatrixXd fd = testutil::fd_jacobian(grad_e, cfg.dof, fd_h);
        CHECK((H - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-5);
        CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      }
  }
}

TEST_CASE("1D energy is convex on the admissible set") {
  auto mesh = build_interval(0.0, 1.0, 8);
  auto rho0 = sample_centroid_density(mesh, [](const Vec<1>& X) { return 1.0 + X[0]; });
  EnergyLaw el(Law::law1, 3.0);
  auto a = testutil::jittered_configuration(mesh, 0.02, 41);
  auto b = testutil::jittered_configuration(mesh, 0.02, 43);
  double Ea = discrete_energy(mesh, rho0, a, el);
  double Eb = discrete_energy(mesh, rho0, b, el);
  for (double t : {0.25, 0.5, 0.75}) {
    Configuration<1> mid{t * a.dof + (1.0 - t) * b.dof, a.n};
    CHECK(discrete_energy(mesh, rho0, mid, el) <= t * Ea + (1.0 - t) * Eb + 1e-12);
  }
}

TEST_CASE("energy blows up as an element collapses") {
  auto mesh = build_interval(0.0, 1.0, 3);
  std::vector<double> rho0(mesh.n_elements(), 1.0);
  EnergyLaw el(Law::law2, 4.0);
  auto cfg = Configuration<1>::identity(mesh);
  double prev = discrete_energy(mesh, rho0, cfg, el);
  for (double x : {0.25, 0.1, 0.01, 1e-4}) {
    cfg.coord(0, 1) = x;  // squeeze the first element toward zero width
    double E = discrete_energy(mesh, rho0, cfg, el);
    CHECK(E > prev);
    prev = E;
  }
}

TEST_CASE("vacuum elements neither store energy nor exert force") {
  auto mesh = build_interval(0.0, 1.0, 9);
  auto rho0 = sample_centroid_density(
      mesh, [](const Vec<1>& X) { return X[0] < 0.5 ? 1.0 + X[0] : 0.0; });
  EnergyLaw el(Law::law1, 2.0);
  auto cfg = testutil::jittered_configuration(mesh, 0.02, 57);
  auto g = action_gradient(mesh, rho0, cfg, el);
  // Nodes whose whole patch is vacuum feel no force.
  CHECK(g[7] == 0.0);
  CHECK(g[8] == 0.0);
  // Energy with the vacuum tail equals the energy of the truncated density.
  auto rho0_trunc = rho0;
  double E = discrete_energy(mesh, rho0, cfg, el);
  rho0_trunc.resize(mesh.n_elements());
  CHECK(E == Catch::Approx(discrete_energy(mesh, rho0_trunc, cfg, el)));
}
