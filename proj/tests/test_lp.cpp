#include <catch2/catch_amalgamated.hpp>

#include "polyreach/lp.hpp"
#include "support/oracles.hpp"

using namespace polyreach;

namespace {

// |x_i| <= r as 2n rows.
void box(int n, double r, Matrix& G, Vector& g) {
  G = Matrix::Zero(2 * n, n);
  g = Vector::Constant(2 * n, r);
  for (int i = 0; i < n; ++i) {
    G(2 * i, i) = 1.0;
    G(2 * i + 1, i) = -1.0;
  }
}

}  // namespace

TEST_CASE("maximum of a coordinate over a small box", "[lp]") {
  Matrix G;
  Vector g;
  box(2, 0.01, G, g);
  Vector c = Vector::Zero(2);
  c[0] = 1.0;
  auto r = lp_solve(c, G, g);
  REQUIRE(r.status == LpStatus::Optimal);
  REQUIRE(r.value == Catch::Approx(0.01).margin(1e-12));
  REQUIRE(r.x[0] == Catch::Approx(0.01).margin(1e-10));
}

TEST_CASE("contradictory bounds are reported infeasible", "[lp]") {
  Matrix G(2, 1);
  Vector g(2);
  G << 1.0, -1.0;
  g << -1.0, 0.0;  // x <= -1 and x >= 0
  Vector c = Vector::Ones(1);
  auto r = lp_solve(c, G, g);
  REQUIRE(r.status == LpStatus::Infeasible);
}

TEST_CASE("missing upper bound is reported unbounded", "[lp]") {
  Matrix G(1, 1);
  Vector g(1);
  G << -1.0;
  g << 0.0;  // x >= 0
  Vector c = Vector::Ones(1);
  auto r = lp_solve(c, G, g);
  REQUIRE(r.status == LpStatus::Unbounded);
}

TEST_CASE("duplicated rows do not stall the pivot loop", "[lp]") {
  Matrix G(6, 2);
  Vector g(6);
  G << 1, 0, 1, 0, 0, 1, 0, 1, -1, 0, 0, -1;
  g << 1, 1, 1, 1, 0, 0;
  Vector c(2);
  c << 1, 1;
  auto r = lp_solve(c, G, g);
  REQUIRE(r.status == LpStatus::Optimal);
  REQUIRE(r.value == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("dual prices a single active facet", "[lp]") {
  Matrix G(3, 2);
  Vector g(3);
  G << 1, 0, 0, 1, 0, -1;
  g << 1, 1, 0;
  Vector c(2);
  c << 1, 0;
  auto r = lp_solve(c, G, g);
  REQUIRE(r.status == LpStatus::Optimal);
  REQUIRE(r.dual[0] == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(r.dual[1] == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(r.dual[2] == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("minimization mirrors maximization", "[lp]") {
  Matrix G;
  Vector g;
  box(3, 2.0, G, g);
  Vector c(3);
  c << 1.0, -0.5, 0.25;
  auto rmin = lp_solve(c, G, g, LpSense::Min);
  auto rmax = lp_solve(-c, G, g, LpSense::Max);
  REQUIRE(rmin.status == LpStatus::Optimal);
  REQUIRE(rmin.value == Catch::Approx(-rmax.value).margin(1e-10));
}

TEST_CASE("zero-width problems reduce to sign checks", "[lp]") {
  Matrix G(2, 0);
  Vector g(2);
  g << 0.5, 0.0;
  Vector c(0);
  auto r = lp_solve(c, G, g);
  REQUIRE(r.status == LpStatus::Optimal);
  REQUIRE(r.value == 0.0);

  g << 0.5, -0.5;
  auto r2 = lp_solve(c, G, g);
  REQUIRE(r2.status == LpStatus::Infeasible);
}

TEST_CASE("randomized instances match vertex enumeration", "[lp][property]") {
  std::mt19937_64 eng(20240817u);
  std::normal_distribution<double> nd(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 1 + static_cast<int>(eng() % 4);
    Matrix G;
    Vector g;
    oracle::random_cset(eng, n, 2 + static_cast<int>(eng() % 4), G, g);
    Vector c(n);
    for (int i = 0; i < n; ++i) c[i] = nd(eng);

    auto want = oracle::lp_max(c, G, g);
    REQUIRE(want.has_value());
    auto r = lp_solve(c, G, g);
    REQUIRE(r.status == LpStatus::Optimal);
    const double scale = 1.0 + std::abs(*want);
    REQUIRE(std::abs(r.value - *want) <= 1e-8 * scale);

    // dual feasibility, stationarity, complementary slackness, strong duality
    REQUIRE(r.dual.minCoeff() >= -1e-8);
    REQUIRE((G.transpose() * r.dual - c).lpNorm<Eigen::Infinity>() <= 1e-7 * (1.0 + c.lpNorm<Eigen::Infinity>()));
    Vector slack = g - G * r.x;
    for (int i = 0; i < slack.size(); ++i) REQUIRE(std::abs(r.dual[i] * slack[i]) <= 1e-6 * scale);
    REQUIRE(std::abs(g.dot(r.dual) - r.value) <= 1e-7 * scale);
    ++solved;
  }
  REQUIRE(solved == 150);
}
