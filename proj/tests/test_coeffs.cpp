#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace homdef;
using namespace homdef::test;

namespace {

std::vector<PeriodicCoefficient> gallery() {
  TensorBlock c(2, 2);
  c << 2, 0.5, 0.5, 1;
  return {constant_coefficient(c, 1, 2),
          laminate_coefficient(2, 2, 1),
          laminate_coefficient(2, 2, 1, 3.0),
          checkerboard_coefficient(2, 1, 4),
          trig_coefficient(2, 2, 1),
          coupled_laminate_coefficient(2, 3, 1, 0.5),
          laminate_coefficient(1, 2, 1)};
}

}  // namespace

TEST_CASE("gallery coefficients are periodic") {
  for (const auto& a : gallery()) {
    for (int s = 0; s < 20; ++s) {
      Point y = Point::Zero(a.dim());
      for (int k = 0; k < a.dim(); ++k) y(k) = 0.037 * s + 0.11 * k + 0.013;
      Point shifted = y;
      shifted(0) += 3.0;
      if (a.dim() == 2) shifted(1) -= 2.0;
      CHECK((a(y) - a(shifted)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("coercivity constants") {
  CHECK(coercivity_constant(identity_coefficient(1, 2)) == doctest::Approx(1.0));
  // samples sit at cell midpoints (i + 1/2) / 64; the nearest to y = 3/4 is 47.5 / 64
  CHECK(coercivity_constant(laminate_coefficient(1, 2, 1)) ==
        doctest::Approx(2.0 + std::sin(2 * std::numbers::pi * 47.5 / 64)).epsilon(1e-12));
  CHECK(coercivity_constant(laminate_coefficient(2, 2, 1), 10) == doctest::Approx(1.0).epsilon(0.05));
  TensorBlock indefinite(2, 2);
  indefinite << 1, 0, 0, -0.5;
  CHECK_THROWS_AS(coercivity_constant(constant_coefficient(indefinite, 1, 2)), NonCoerciveError);
}

TEST_CASE("combined coercivity with defects") {
  const auto a = identity_coefficient(1, 2);
  CHECK(combined_coercivity(a, ball_defect(scalar_block(0.0, 2), 1, 2, 1.0)) ==
        doctest::Approx(coercivity_constant(a)));
  CHECK(combined_coercivity(a, ball_defect(scalar_block(-0.5, 2), 1, 2, 1.0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(combined_coercivity(a, ball_defect(scalar_block(-2.0, 2), 1, 2, 1.0)), NonCoerciveError);

  const auto lam = laminate_coefficient(2, 2, 1);
  const auto b = scaled_ball_defect(lam, -0.5, 1.0);
  CHECK(combined_coercivity(lam, b) <= coercivity_constant(lam) + 1e-12);
  CHECK(combined_coercivity(lam, b) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("compact defects vanish outside their ball") {
  const auto b = ball_defect(scalar_block(-0.5, 2), 1, 2, 1.0);
  REQUIRE(b.support_radius());
  CHECK(*b.support_radius() == 1.0);
  CHECK(b(point(1.0001, 0.0)).norm() == 0.0);
  CHECK(b(point(0.6, 0.79)).norm() > 0.0);
  CHECK(b(point(-5.0, 3.0)).norm() == 0.0);
}

TEST_CASE("gaussian defect L1 mass converges as the box grows") {
  const double amp = 0.3, width = 0.5;
  const auto b = gaussian_defect(1, 2, amp, width);
  CHECK_FALSE(b.support_radius());
  REQUIRE(b.declared_l1());
  auto mass = [&](double half) {
    const int n = 400;
    const double h = 2 * half / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += std::abs(b(point(-half + (i + 0.5) * h, -half + (j + 0.5) * h))(0, 0));
    return s * h * h;
  };
  const double exact = amp * std::numbers::pi * width * width;
  const double m1 = mass(1.0), m2 = mass(2.0), m3 = mass(4.0);
  CHECK(std::abs(m2 - exact) < std::abs(m1 - exact));
  CHECK(m3 == doctest::Approx(exact).epsilon(1e-4));
  CHECK(*b.declared_l1() == doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("nonlinearity derivatives match finite differences") {
  std::vector<Point> xs = {point(0.1, 0.2), point(0.7, 0.4)};
  std::vector<SmallVector> us;
  for (double v : {-1.3, 0.0, 0.4, 2.1}) us.push_back(SmallVector::Constant(1, v));
  CHECK(derivative_mismatch(zero_nonlinearity(1, 2), xs, us) <= 1e-6);
  CHECK(derivative_mismatch(linear_nonlinearity(1, 2, 3.0), xs, us) <= 1e-6);
  CHECK(derivative_mismatch(cubic_nonlinearity(1, 2, 10.0), xs, us) <= 1e-6);
  CHECK(derivative_mismatch(cubic_nonlinearity(1, 2, 1.0, 2.0, -3.0), xs, us) <= 1e-6);
  CHECK(derivative_mismatch(convective_nonlinearity(1, 2, {1.0, -2.0}, 1.0), xs, us) <= 1e-6);

  std::vector<SmallVector> pairs;
  for (double v : {-0.7, 0.3, 1.1}) {
    SmallVector u(2);
    u << v, 0.5 - v;
    pairs.push_back(u);
  }
  CHECK(derivative_mismatch(cubic_nonlinearity(2, 2, 1.0), xs, pairs) <= 1e-6);
}

TEST_CASE("nonlinearities stay bounded on bounded u") {
  const auto nl = cubic_nonlinearity(1, 2, 10.0);
  for (double u = -2; u <= 2; u += 0.25) {
    const auto t = nl(point(0.3, 0.3), SmallVector::Constant(1, u));
    CHECK(std::isfinite(t.source(0)));
    CHECK(std::abs(t.source(0)) <= 8 + 2 + 10 + 1e-12);
  }
}

TEST_CASE("coefficient tables interpolate bilinearly") {
  Matrix samples(2, 2);
  samples << 1, 2, 3, 4;
  const auto a = table_coefficient(2, samples);
  CHECK(a(point(0.0, 0.0))(0, 0) == doctest::Approx(1.0));
  CHECK(a(point(0.5, 0.0))(0, 0) == doctest::Approx(2.0));
  CHECK(a(point(0.25, 0.0))(0, 0) == doctest::Approx(1.5));
  CHECK(a(point(0.75, 0.0))(0, 0) == doctest::Approx(1.5));  // wraps back to column 0
  CHECK(a(point(0.0, 0.5))(0, 0) == doctest::Approx(3.0));
}
