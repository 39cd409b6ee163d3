#include "lagdiff/mesh.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace lagdiff;

namespace {

Triangulation<2> single_triangle(Vec<2> a, Vec<2> b, Vec<2> c) {
  Triangulation<2> mesh;
  mesh.nodes = {a, b, c};
  mesh.elements = {{0, 1, 2}};
  mesh.finalize();
  return mesh;
}

}  // namespace

TEST_CASE("identity configuration has unit deformation gradient") {
  auto mesh = single_triangle({0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0});
  auto cfg = Configuration<2>::identity(mesh);
  Mat<2> F = deformation_gradient(mesh, cfg, 0);
  CHECK(F.isApprox(Mat<2>::Identity(), 1e-14));
  CHECK(det_F(mesh, cfg, 0) == Catch::Approx(1.0).margin(1e-14));
  CHECK(mesh.measures[0] == Catch::Approx(0.5));
}

TEST_CASE("uniform dilation and shear give the expected gradients") {
  auto mesh = single_triangle({0.2, -0.1}, {1.1, 0.3}, {0.4, 0.9});
  auto cfg = Configuration<2>::identity(mesh);

  SECTION("x -> 2x") {
    cfg.dof *= 2.0;
    Mat<2> F = deformation_gradient(mesh, cfg, 0);
    CHECK(F.isApprox(2.0 * Mat<2>::Identity(), 1e-14));
    CHECK(det_F(mesh, cfg, 0) == Catch::Approx(4.0));
  }
  SECTION("shear x -> x + 0.3 y keeps det F = 1") {
    for (int i = 0; i < 3; ++i) {
      Vec<2> p = cfg.pos(i);
      cfg.set_pos(i, Vec<2>(p[0] + 0.3 * p[1], p[1]));
    }
    Mat<2> F = deformation_gradient(mesh, cfg, 0);
    CHECK(F(0, 1) == Catch::Approx(0.3).margin(1e-14));
    CHECK(det_F(mesh, cfg, 0) == Catch::Approx(1.0).margin(1e-14));
  }
  SECTION("translation leaves F untouched") {
    Mat<2> F0 = deformation_gradient(mesh, cfg, 0);
    for (int i = 0; i < 3; ++i) cfg.set_pos(i, cfg.pos(i) + Vec<2>(3.7, -1.2));
    CHECK(deformation_gradient(mesh, cfg, 0).isApprox(F0, 1e-14));
  }
}

TEST_CASE("reflections are inadmissible") {
  auto mesh = single_triangle({0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0});
  auto cfg = Configuration<2>::identity(mesh);
  for (int i = 0; i < 3; ++i) {
    Vec<2> p = cfg.pos(i);
    cfg.set_pos(i, Vec<2>(-p[0], p[1]));
  }
  CHECK(det_F(mesh, cfg, 0) == Catch::Approx(-1.0));
  CHECK_FALSE(is_admissible(mesh, cfg));
}

TEST_CASE("1D deformation gradient is the gap ratio") {
  auto mesh = build_interval(0.0, 1.0, 5);
  auto cfg = Configuration<1>::identity(mesh);
  cfg.coord(0, 3) = 0.95;  // stretch element [0.5, 0.75] to [0.5, 0.95]
  CHECK(det_F(mesh, cfg, 2) == Catch::Approx((0.95 - 0.5) / 0.25));
  CHECK(det_F(mesh, cfg, 3) == Catch::Approx((1.0 - 0.95) / 0.25));
  CHECK(is_admissible(mesh, cfg));
  cfg.coord(0, 3) = 1.2;  // now element 3 is inverted
  CHECK_FALSE(is_admissible(mesh, cfg));
  CHECK(admissibility_margin(mesh, cfg) == Catch::Approx((1.0 - 1.2) / 0.25));
}

TEST_CASE("interval builder places nodes uniformly and marks the endpoints") {
  auto mesh = build_interval(-M_PI, 0.0, 5);
  REQUIRE(mesh.n_nodes() == 5);
  REQUIRE(mesh.n_elements() == 4);
  CHECK(mesh.nodes[1][0] == Catch::Approx(-0.75 * M_PI));
  CHECK(mesh.nodes[4][0] == 0.0);
  CHECK(mesh.boundary_node[0] == 1);
  CHECK(mesh.boundary_node[4] == 1);
  CHECK(mesh.boundary_node[2] == 0);
  REQUIRE(mesh.boundary_loops.size() == 2);
  CHECK(mesh.boundary_loops[0][0] == 0);
  CHECK(mesh.boundary_loops[1][0] == 4);
}

TEST_CASE("interval end refinement bisects the outermost elements") {
  auto mesh = build_interval(-M_PI, 0.0, 105, 1);
  REQUIRE(mesh.n_nodes() == 107);
  const double h = M_PI / 104;
  CHECK(mesh.measures.front() == Catch::Approx(h / 2));
  CHECK(mesh.measures.back() == Catch::Approx(h / 2));
  CHECK(mesh.measures[1] == Catch::Approx(h / 2));
  CHECK(mesh.measures[2] == Catch::Approx(h));
  double total = 0.0;
  for (double m : mesh.measures) total += m;
  CHECK(total == Catch::Approx(M_PI));
}

TEST_CASE("square builder: 2x2 cells give 9 nodes, 8 triangles, unit area") {
  auto mesh = build_square(0.0, 1.0, 2);
  REQUIRE(mesh.n_nodes() == 9);
  REQUIRE(mesh.n_elements() == 8);
  double area = 0.0;
  for (double m : mesh.measures) area += m;
  CHECK(area == Catch::Approx(1.0));
  int interior = 0;
  for (char b : mesh.boundary_node) interior += (b == 0);
  CHECK(interior == 1);  // only the centre node
  REQUIRE(mesh.boundary_loops.size() == 1);
  CHECK(mesh.boundary_loops[0].size() == 8);
  auto cfg = Configuration<2>::identity(mesh);
  CHECK(is_admissible(mesh, cfg));
}

TEST_CASE("hat function gradients sum to zero and reproduce linear fields") {
  auto mesh = build_square(-1.0, 1.0, 3);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Vec<2> coeff(unif(rng), unif(rng));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Vec<2> sum = Vec<2>::Zero();
    Vec<2> grad_of_linear = Vec<2>::Zero();
    for (int l = 0; l < 3; ++l) {
      sum += mesh.grads[e][l];
      grad_of_linear += coeff.dot(mesh.nodes[mesh.elements[e][l]]) * mesh.grads[e][l];
    }
    CHECK(sum.norm() < 1e-13);
    CHECK((grad_of_linear - coeff).norm() < 1e-12);
  }
}

TEST_CASE("random admissible configurations: det F equals the gradient determinant") {
  auto mesh = build_square(0.0, 1.0, 4);
  auto cfg = Configuration<2>::identity(mesh);
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int i = 0; i < cfg.n; ++i)
    cfg.set_pos(i, cfg.pos(i) + Vec<2>(jitter(rng), jitter(rng)));
  REQUIRE(is_admissible(mesh, cfg));
  for (int e = 0; e < mesh.n_elements(); ++e)
    CHECK(det_F(mesh, cfg, e) == Catch::Approx(deformation_gradient(mesh, cfg, e).determinant()));
}

TEST_CASE("disk builder produces a valid graded mesh") {
  auto mesh = build_disk(1.4606, 6);
  CHECK(is_admissible(mesh, Configuration<2>::identity(mesh)));
  double area = 0.0;
  for (double m : mesh.measures) area += m;
  CHECK(area == Catch::Approx(M_PI * 1.4606 * 1.4606).epsilon(0.05));
  REQUIRE(mesh.boundary_loops.size() == 1);

  auto graded = build_disk(1.0, 12, 1.0, 4.0, 4.0);
  CHECK(is_admissible(graded, Configuration<2>::identity(graded)));
  // Grading pushes rings toward the rim: the last radial gap is much smaller.
  double r_last = 1.0, r_prev = 0.0, r_first = 2.0;
  for (const auto& x : graded.nodes) {
    double r = x.norm();
    if (r > r_prev && r < 1.0 - 1e-9) r_prev = r;
    if (r > 1e-9 && r < r_first) r_first = r;
  }
  CHECK((r_last - r_prev) < 0.5 * r_first);
}

TEST_CASE("degenerate elements are rejected with the element index") {
  Triangulation<2> mesh;
  mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {0.0, 1.0}};
  mesh.elements = {{0, 1, 3}, {0, 1, 2}};
  CHECK_THROWS_WITH(mesh.finalize(), Catch::Matchers::ContainsSubstring("element 1") &&
                                         Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("clockwise elements are silently reordered") {
  Triangulation<2> mesh;
  mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  mesh.elements = {{0, 2, 1}};  // clockwise
  mesh.finalize();
  CHECK(mesh.measures[0] == Catch::Approx(0.5));
  CHECK(is_admissible(mesh, Configuration<2>::identity(mesh)));
}

TEST_CASE("mesh file round trip preserves geometry") {
  auto mesh = build_square(0.0, 2.0, 3);
  std::stringstream ss;
  write_mesh(mesh, ss);
  auto loaded = load_mesh<2>(ss);
  REQUIRE(loaded.n_nodes() == mesh.n_nodes());
  REQUIRE(loaded.n_elements() == mesh.n_elements());
  for (int i = 0; i < mesh.n_nodes(); ++i) CHECK((loaded.nodes[i] - mesh.nodes[i]).norm() == 0.0);
  for (int e = 0; e < mesh.n_elements(); ++e)
    CHECK(loaded.measures[e] == Catch::Approx(mesh.measures[e]));
}

TEST_CASE("mesh files support comments and report malformed lines") {
  SECTION("comments and blank lines are skipped") {
    std::stringstream ss("# a triangle\n\nnodes 3\n0 0\n1 0  # second node\n0 1\nelements 1\n0 1 2\n");
    auto mesh = load_mesh<2>(ss);
    CHECK(mesh.n_elements() == 1);
    CHECK(mesh.measures[0] == Catch::Approx(0.5));
  }
  SECTION("bad header") {
    std::stringstream ss("vertices 3\n");
    CHECK_THROWS_WITH(load_mesh<2>(ss), Catch::Matchers::ContainsSubstring("line 1") &&
                                            Catch::Matchers::ContainsSubstring("nodes"));
  }
  SECTION("truncated coordinates name the offending line") {
    std::stringstream ss("nodes 3\n0 0\n1\n0 1\nelements 1\n0 1 2\n");
    CHECK_THROWS_WITH(load_mesh<2>(ss), Catch::Matchers::ContainsSubstring("line 3"));
  }
  SECTION("out-of-range element index") {
    std::stringstream ss("nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 5\n");
    CHECK_THROWS_WITH(load_mesh<2>(ss), Catch::Matchers::ContainsSubstring("element 0") &&
                                            Catch::Matchers::ContainsSubstring("out of range"));
  }
  SECTION("1D files hold one coordinate per node") {
    std::stringstream ss("nodes 3\n0\n0.5\n1\nelements 2\n0 1\n1 2\n");
    auto mesh = load_mesh<1>(ss);
    CHECK(mesh.n_elements() == 2);
    CHECK(mesh.measures[1] == Catch::Approx(0.5));
  }
}

TEST_CASE("horseshoe builder closes the annular sector with matching caps") {
  const auto mesh = build_horseshoe(0.5, 1.0, 10, 74);
  CHECK(mesh.n_nodes() == 909);
  REQUIRE(mesh.boundary_loops.size() == 1);  // simply connected C-shape

  // total area: 3/4 annulus plus two half disks of radius 1/4
  double area = 0.0;
  for (const double a : mesh.measures) area += a;
  CHECK(area == Catch::Approx(0.625 * M_PI).epsilon(0.01));

  // every node stays inside the bounding box of the shape
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    CHECK(mesh.nodes[i].norm() <= 1.0 + 1e-12);
    const bool in_annulus = mesh.nodes[i].norm() >= 0.5 - 1e-12;
    const bool in_cap_top = (mesh.nodes[i] - Vec<2>{0.0, 0.75}).norm() <= 0.25 + 1e-12;
    const bool in_cap_right = (mesh.nodes[i] - Vec<2>{0.75, 0.0}).norm() <= 0.25 + 1e-12;
    CHECK((in_annulus || in_cap_top || in_cap_right));
  }

  CHECK_THROWS_AS(build_horseshoe(0.5, 1.0, 9, 74), mesh_error);   // odd radial count
  CHECK_THROWS_AS(build_horseshoe(0.5, 1.0, 10, 2), mesh_error);
  CHECK_THROWS_AS(build_horseshoe(1.0, 0.5, 10, 74), mesh_error);
}
