#include <doctest.h>

#include "oracles.hpp"

using namespace bcs;

namespace {

std::vector<GradientScope> scopes() {
  return {GradientScope::frame(), GradientScope::per_block(4), GradientScope::multi_block(4, 2)};
}

}  // namespace

TEST_CASE("gradient matches the dense difference matrix") {
  std::mt19937_64 rng(3);
  for (const auto& scope : scopes()) {
    const VectorXd u = oracle::random_vector(12 * 16, rng);
    const MatrixXd d = oracle::dense_gradient(12, 16, scope);
    CHECK(oracle::rel_err(oracle::stack(gradient(u, 12, 16, scope)), d * u) < 1e-14);
    const auto g = oracle::random_field(12, 16, rng);
    CHECK(oracle::rel_err(gradient_adjoint(g, scope), d.transpose() * oracle::stack(g)) < 1e-14);
  }
}

TEST_CASE("per-block scope has no differences across seams") {
  const auto scope = GradientScope::per_block(4);
  const VectorXd u = VectorXd::LinSpaced(64, 0.0, 63.0);
  const auto g = gradient(u, 8, 8, scope);
  CHECK(g.dx(0, 3) == 0.0);
  CHECK(g.dx(0, 2) == 1.0);
  CHECK(g.dy(3, 0) == 0.0);
  CHECK(g.dy(2, 0) == 8.0);
  // last row and column never difference
  CHECK(gradient(u, 8, 8, GradientScope::frame()).dx.col(7).isZero(0.0));
}

TEST_CASE("full-span multi-block scope equals the frame gradient") {
  std::mt19937_64 rng(4);
  const VectorXd u = oracle::random_vector(16 * 16, rng);
  const auto a = gradient(u, 16, 16, GradientScope::multi_block(4, 4));
  const auto b = gradient(u, 16, 16, GradientScope::frame());
  CHECK(a.dx == b.dx);
  CHECK(a.dy == b.dy);
}

TEST_CASE("total variation of a step") {
  ImageXd img(4, 4);
  img.pixels().rightCols(2).setConstant(10.0);
  CHECK(total_variation(img, GradientScope::frame()) == doctest::Approx(40.0));
  CHECK(total_variation(img, GradientScope::per_block(2)) == 0.0);
}

TEST_CASE("scope validation") {
  CHECK_THROWS_AS(GradientScope::per_block(0), InvalidArgument);
  CHECK_THROWS_AS(GradientScope::multi_block(4, 0), InvalidArgument);
  CHECK_THROWS_AS(gradient(VectorXd::Zero(5), 2, 2, GradientScope::frame()), InvalidDimensions);
}
