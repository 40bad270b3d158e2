#include "support.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace homdef;
using namespace homdef::test;

namespace {

// Algebraic checks on small meshes do not need the eps/8 resolution floor.
const AssemblyOptions loose{8.0, true};

Vector random_vector(int n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

/// Smallest generalized eigenvalue of (K, M) by inverse iteration.
double smallest_eigenvalue(const SparseOperator& K, const CsrMatrix& M) {
  const Factorization f(K);
  Vector x = Vector::Ones(K.rows());
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    x = f.solve(M * x);
    x /= std::sqrt(x.dot(M * x));
    const double next = x.dot(K.matrix * x);
    if (std::abs(next - lambda) < 1e-12 * next) break;
    lambda = next;
  }
  return lambda;
}

}  // namespace

TEST_CASE("1D identity stiffness is the second-difference matrix") {
  const int m = 10;
  auto mesh = interval_mesh(m);
  const Assembler as(mesh, 1);
  const SparseOperator K = as.stiffness(Diffusion::homogenized(scalar_block(1.0), 1, 1));
  const double h = 1.0 / m;
  REQUIRE(K.rows() == m - 1);
  const Matrix dense = Matrix(K.matrix);
  for (int i = 0; i < m - 1; ++i)
    for (int j = 0; j < m - 1; ++j) {
      const double expected = i == j ? 2 / h : (std::abs(i - j) == 1 ? -1 / h : 0.0);
      CHECK(dense(i, j) == doctest::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("constant coefficient stiffness does not depend on eps") {
  auto mesh = square_mesh(16);
  const Assembler as(mesh, 1);
  TensorBlock c(2, 2);
  c << 2, 0.3, 0.3, 1;
  const auto a = constant_coefficient(c, 1, 2);
  const SparseOperator K1 = as.stiffness(Diffusion::oscillating(a, 0.5));
  const SparseOperator K2 = as.stiffness(Diffusion::oscillating(a, 0.01));
  CHECK((Matrix(K1.matrix) - Matrix(K2.matrix)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rows away from the boundary sum to zero") {
  const double eps = 0.25;
  auto mesh = square_mesh(64);  // h = sqrt(2)/64 < eps/16
  const Assembler as(mesh, 1);
  const SparseOperator K = as.stiffness(Diffusion::oscillating(laminate_coefficient(2, 2, 1), eps));
  const DofLayout& layout = as.layout();
  int checked = 0;
  for (int n = 0; n < mesh->num_nodes(); ++n) {
    const int dof = layout.dof(n, 0);
    if (dof < 0 || mesh->distance_to_boundary(n) < 1.5 / 64) continue;
    double sum = 0.0;
    for (CsrMatrix::InnerIterator it(K.matrix, dof); it; ++it) sum += it.value();
    CHECK(std::abs(sum) <= 1e-10);
    ++checked;
  }
  CHECK(checked == 61 * 61);
}

TEST_CASE("symmetric scalar coefficients give symmetric stiffness") {
  auto mesh = square_mesh(32);
  const Assembler as(mesh, 1);
  const SparseOperator K = as.stiffness(Diffusion::oscillating(trig_coefficient(2, 2, 1), 0.5));
  CHECK(K.max_asymmetry() <= 1e-12);
  CHECK(K.symmetric);
}

TEST_CASE("under-resolved oscillating coefficients are rejected") {
  auto mesh = square_mesh(16);
  const Assembler as(mesh, 1);
  CHECK_THROWS_AS(as.stiffness(Diffusion::oscillating(laminate_coefficient(2, 2, 1), 0.1)), ConfigError);
  const Assembler loose(mesh, 1, AssemblyOptions{8.0, true});
  CHECK_NOTHROW(loose.stiffness(Diffusion::oscillating(laminate_coefficient(2, 2, 1), 0.1)));
}

TEST_CASE("residual of zero data at zero is zero") {
  auto mesh = square_mesh(8);
  const Assembler as(mesh, 1);
  const DiscreteField u(mesh, 1);
  const Vector F = as.residual(Diffusion::homogenized(scalar_block(1.0, 2), 1, 2), zero_nonlinearity(1, 2), u);
  CHECK(F.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reaction residual equals (K + M) u against a direct 1D assembly") {
  const int m = 12;
  auto mesh = interval_mesh(m);
  const Assembler as(mesh, 1);
  const DiscreteField u = interpolate(mesh, [](const Point& x) { return std::sin(3 * x(0)) + x(0); });
  const Vector F = as.residual(Diffusion::homogenized(scalar_block(1.0), 1, 1), linear_nonlinearity(1, 1, 0.0), u);
  // one-point rule: element mass h/4 in every entry
  const double h = 1.0 / m;
  for (int i = 1; i < m; ++i) {
    const double ul = u(i - 1, 0), uc = u(i, 0), ur = u(i + 1, 0);
    const double stiff = (2 * uc - ul - ur) / h;
    const double mass = h / 4 * (ul + 2 * uc + ur);
    CHECK(F(i - 1) == doctest::Approx(stiff + mass).epsilon(1e-13));
  }
}

TEST_CASE("reaction residual equals (K + M) u in 2D") {
  auto mesh = square_mesh(10);
  const Assembler as(mesh, 1);
  const Diffusion diff = Diffusion::homogenized(scalar_block(1.0, 2), 1, 2);
  const DiscreteField u = interpolate(mesh, [](const Point& x) { return x(0) * x(1) + 0.3; });
  const Vector F = as.residual(diff, linear_nonlinearity(1, 2, 0.0), u);
  const Vector ui = as.layout().restrict(u.values());
  const Vector direct = (as.stiffness(diff).matrix + as.barycentric_mass().matrix) * ui;
  CHECK((F - direct).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("linear problems have u-independent Jacobians") {
  auto mesh = square_mesh(16);
  const Assembler as(mesh, 1, loose);
  const Diffusion diff = Diffusion::oscillating(laminate_coefficient(2, 2, 1), 0.25);
  const auto nl = linear_nonlinearity(1, 2, 5.0);
  const DiscreteField u0(mesh, 1);
  const DiscreteField u1 = interpolate(mesh, [](const Point& x) { return std::exp(x(0)) * x(1); });
  const Matrix J0 = Matrix(as.jacobian(diff, nl, u0).matrix);
  const Matrix J1 = Matrix(as.jacobian(diff, nl, u1).matrix);
  CHECK((J0 - J1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cubic Jacobian minus stiffness is the 3u^2-weighted reaction matrix") {
  const int m = 8;
  auto mesh = interval_mesh(m);
  const Assembler as(mesh, 1);
  const Diffusion diff = Diffusion::homogenized(scalar_block(1.0), 1, 1);
  const DiscreteField u = interpolate(mesh, [](const Point& x) { return 1 + x(0); });
  const Matrix R = Matrix(as.jacobian(diff, cubic_nonlinearity(1, 1, 0.0, 1.0, 0.0), u).matrix) -
                   Matrix(as.stiffness(diff).matrix);
  const double h = 1.0 / m;
  for (int i = 1; i < m; ++i) {
    const double left = 0.5 * (u(i - 1, 0) + u(i, 0));
    const double right = 0.5 * (u(i, 0) + u(i + 1, 0));
    CHECK(R(i - 1, i - 1) == doctest::Approx(h / 4 * 3 * (left * left + right * right)));
    if (i < m - 1) CHECK(R(i - 1, i) == doctest::Approx(h / 4 * 3 * right * right));
  }
}

TEST_CASE("Jacobian matches finite differences of the residual") {
  auto mesh = square_mesh(32);
  const Assembler as(mesh, 1, loose);
  const Diffusion diff = Diffusion::oscillating(laminate_coefficient(2, 2, 1), 0.25, scaled_ball_defect(laminate_coefficient(2, 2, 1), -0.5, 1.0));
  const int n = as.layout().num_dofs();
  for (const auto& nl : {cubic_nonlinearity(1, 2, 10.0), convective_nonlinearity(1, 2, {1.0, 2.0}, 1.0),
                         cubic_nonlinearity(1, 2, 1.0, 2.0, -3.0)}) {
    const Vector ui = random_vector(n, 11);
    const Vector v = random_vector(n, 12);
    const DiscreteField u = DiscreteField::from_interior(mesh, 1, ui);
    const Vector Jv = as.jacobian(diff, nl, u).matrix * v;
    const double t = 1e-6;
    const Vector Fp = as.residual(diff, nl, DiscreteField::from_interior(mesh, 1, ui + t * v));
    const Vector Fm = as.residual(diff, nl, DiscreteField::from_interior(mesh, 1, ui - t * v));
    const Vector fd = (Fp - Fm) / (2 * t);
    CHECK((fd - Jv).norm() / Jv.norm() <= 1e-5);
  }
}

TEST_CASE("solve_spd basics") {
  SparseOperator I;
  I.matrix.resize(5, 5);
  I.matrix.setIdentity();
  I.symmetric = true;
  const Vector b = random_vector(5, 3);
  CHECK((solve_spd(I, b) - b).norm() <= 1e-14);

  // 1D Poisson with f = 1: P1 is nodally exact
  const int m = 32;
  auto mesh = interval_mesh(m);
  const Assembler as(mesh, 1);
  const SparseOperator K = as.stiffness(Diffusion::homogenized(scalar_block(1.0), 1, 1));
  const Vector load = Vector::Constant(m - 1, 1.0 / m);
  const Vector u = solve_spd(K, load);
  for (int i = 1; i < m; ++i) {
    const double x = static_cast<double>(i) / m;
    CHECK(u(i - 1) == doctest::Approx(x * (1 - x) / 2).epsilon(1e-9));
  }
}

TEST_CASE("random SPD round trip through CG and the direct factorization") {
  const int n = 50;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = u(rng);
  const Matrix A = B * B.transpose() + n * Matrix::Identity(n, n);
  SparseOperator op;
  op.matrix = A.sparseView();
  op.symmetric = true;
  const Vector b = random_vector(n, 6);
  CHECK((A * solve_spd(op, b) - b).norm() <= 1e-9 * b.norm());
  const CgResult cg = conjugate_gradient(op.matrix, b, CgOptions{1e-12, 0});
  CHECK((A * cg.solution - b).norm() <= 1e-9 * b.norm());
  CHECK((A * Factorization(op).solve(b) - b).norm() <= 1e-9 * b.norm());
}

TEST_CASE("nested dissection and default orderings agree") {
  auto mesh = square_mesh(40);
  const Assembler as(mesh, 1, loose);
  const SparseOperator K = as.stiffness(Diffusion::oscillating(trig_coefficient(2, 2, 1), 0.25));
  const Vector b = random_vector(K.rows(), 9);
  const Vector x1 = Factorization(K).solve(b);
  const Vector x2 = Factorization(K, &as.ordering()).solve(b);
  CHECK((x1 - x2).norm() <= 1e-10 * x1.norm());
}

TEST_CASE("nonsymmetric operators use LU and transpose solves") {
  auto mesh = square_mesh(16);
  const Assembler as(mesh, 1);
  const DiscreteField u = interpolate(mesh, [](const Point& x) { return x(0) + x(1); });
  const SparseOperator J =
      as.jacobian(Diffusion::homogenized(scalar_block(1.0, 2), 1, 2), convective_nonlinearity(1, 2, {3, 1}, 0), u);
  CHECK(J.max_asymmetry() > 1e-6);
  const Factorization f(J);
  CHECK_FALSE(f.symmetric());
  const Vector b = random_vector(J.rows(), 4);
  CHECK((J.matrix * f.solve(b) - b).norm() <= 1e-10 * b.norm());
  CHECK((CsrMatrix(J.matrix.transpose()) * f.solve_transpose(b) - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("dual norm surrogate") {
  auto mesh = square_mesh(16);
  const Assembler as(mesh, 1);
  const int n = as.layout().num_dofs();
  CHECK(as.dual_norm(Vector::Zero(n)) == 0.0);
  const Vector v = random_vector(n, 8);
  const Vector phi = as.gram().matrix * v;
  CHECK(as.dual_norm(phi) == doctest::Approx(as.h1_norm(v)).epsilon(1e-8));
  CHECK(dual_norm_surrogate(phi, mesh) == doctest::Approx(as.h1_norm(v)).epsilon(1e-8));
}

TEST_CASE("dual norm of a fixed functional stabilizes under refinement") {
  // phi(w) = integral of sin(pi x) sin(pi y) w
  std::vector<double> values;
  for (int m : {32, 64, 128}) {
    auto mesh = square_mesh(m);
    const Assembler as(mesh, 1);
    const DiscreteField f = interpolate(mesh, [](const Point& x) {
      return std::sin(std::numbers::pi * x(0)) * std::sin(std::numbers::pi * x(1));
    });
    const Vector phi = as.consistent_mass().matrix * as.layout().restrict(f.values());
    values.push_back(as.dual_norm(phi));
  }
  CHECK(std::abs(values[2] - values[1]) / values[2] <= 0.02);
  CHECK(std::abs(values[2] - values[1]) < std::abs(values[1] - values[0]));
}

TEST_CASE("discrete coercivity bound is mesh independent") {
  // K >= c0 * (-Laplacian) >= c0 * 2 pi^2 * M on the unit square
  const auto a = laminate_coefficient(2, 2, 1);
  const double c0 = coercivity_constant(a);
  for (int m : {32, 64}) {
    auto mesh = square_mesh(m);
    const Assembler as(mesh, 1, loose);
    const double lambda = smallest_eigenvalue(as.stiffness(Diffusion::oscillating(a, 0.25)),
                                              as.consistent_mass().matrix);
    CHECK(lambda >= c0 * 2 * std::numbers::pi * std::numbers::pi);
  }
}

TEST_CASE("discrete fields: Dirichlet trace and gradients") {
  auto mesh = square_mesh(8);
  const DiscreteField u = interpolate(mesh, [](const Point& x) { return 2 * x(0) - x(1); });
  CHECK(u.satisfies_dirichlet());
  // interior elements see the exact gradient of the affine function
  int checked = 0;
  for (int e = 0; e < mesh->num_elements(); ++e) {
    bool inner = true;
    for (int p = 0; p < 3; ++p) inner = inner && !mesh->on_boundary[mesh->elements(p, e)];
    if (!inner) continue;
    const TensorBlock g = u.element_gradient(e);
    CHECK(g(0, 0) == doctest::Approx(2.0));
    CHECK(g(0, 1) == doctest::Approx(-1.0));
    ++checked;
  }
  CHECK(checked > 0);
}
