#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "karma/core.hpp"

using namespace karma;
using Catch::Approx;

TEST_CASE("observed vector invariants") {
  ObservedVector v(4, {0, 2}, {1.0, -0.5});
  CHECK(v.dim() == 4);
  CHECK(v.observed_count() == 2);
  CHECK(v.observed_norm() == Approx(std::sqrt(1.25)));
  CHECK(v.observed_inf_norm() == 1.0);

  CHECK_NOTHROW(ObservedVector(3, {}, {}));  // fully missing is legal
  CHECK_THROWS_AS(ObservedVector(3, {0, 0}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ObservedVector(3, {2, 1}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ObservedVector(3, {0, 3}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ObservedVector(3, {0}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ObservedVector(0, {}, {}), std::invalid_argument);

  auto d = ObservedVector::dense({1, 2, 3});
  CHECK(d.fully_observed());
  CHECK(d.to_dense() == std::vector<double>{1, 2, 3});

  std::vector<double> fill{9, 9, 9, 9};
  CHECK(v.to_dense(&fill) == std::vector<double>{1.0, 9, -0.5, 9});
  CHECK(v.to_dense() == std::vector<double>{1.0, 0, -0.5, 0});
}

TEST_CASE("loss values at fixed points") {
  auto hinge = LossSpec::hinge();
  CHECK(loss_value(hinge, 1.0, 1.0) == 0.0);
  CHECK(loss_value(hinge, 0.0, 1.0) == 1.0);
  CHECK(loss_value(LossSpec::squared(4.0), 0.5, 1.0) == Approx(0.25));

  CHECK(loss_subgradient(hinge, 0.0, 1.0) == -1.0);
  CHECK(loss_subgradient(hinge, 2.0, 1.0) == 0.0);
  // at the kink the chosen subgradient is 0, which lies in [-1, 0]
  double g = loss_subgradient(hinge, 1.0, 1.0);
  CHECK(g == 0.0);
  CHECK(g >= -1.0);
  CHECK(g <= 0.0);
}

TEST_CASE("logistic loss is stable far from the margin") {
  auto lg = LossSpec::logistic();
  CHECK(loss_value(lg, 1000.0, 1.0) == Approx(0.0).margin(1e-12));
  CHECK(loss_value(lg, -1000.0, 1.0) == Approx(1000.0));
  CHECK(std::isfinite(loss_subgradient(lg, -1000.0, 1.0)));
  CHECK(loss_subgradient(lg, -1000.0, 1.0) == Approx(-1.0));
}

TEST_CASE("losses are convex and Lipschitz-bounded") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pd(-10.0, 10.0);
  std::uniform_real_distribution<double> yd(-2.0, 2.0);
  const LossSpec specs[] = {LossSpec::hinge(), LossSpec::logistic(), LossSpec::squared(40.0)};
  for (const auto& spec : specs) {
    for (int trial = 0; trial < 2000; ++trial) {
      double y = spec.kind == LossKind::squared ? yd(rng) : (rng() % 2 ? 1.0 : -1.0);
      double p = pd(rng), q = pd(rng);
      // midpoint convexity
      double mid = loss_value(spec, 0.5 * (p + q), y);
      CHECK(mid <= 0.5 * loss_value(spec, p, y) + 0.5 * loss_value(spec, q, y) + 1e-12);
      // subgradient inequality: l(q) >= l(p) + g(p)(q - p)
      double g = loss_subgradient(spec, p, y);
      CHECK(loss_value(spec, q, y) >= loss_value(spec, p, y) + g * (q - p) - 1e-9);
      // |g| <= L within the declared operating range
      if (spec.kind != LossKind::squared || std::abs(2.0 * (p - y)) <= spec.lipschitz)
        CHECK(std::abs(g) <= spec.lipschitz + 1e-12);
    }
  }
}

TEST_CASE("embedding dimension bookkeeping") {
  CHECK(gamma_dims(2, 2).embed_dim == 6.0);   // 2 + 4
  CHECK(gamma_dims(5, 1).embed_dim == 5.0);   // Gamma(d, 1) = d
  CHECK(gamma_dims(4, 3).embed_dim == 84.0);  // 4 + 16 + 64
  CHECK(gamma_dims(1, 7).embed_dim == 7.0);   // d = 1 collapses to gamma

  // closed form equals the explicit sum on a small grid
  for (int d = 1; d <= 10; ++d) {
    for (int g = 1; g <= 6; ++g) {
      double sum = 0.0, term = 1.0;
      for (int k = 1; k <= g; ++k) {
        term *= d;
        sum += term;
      }
      GammaDims dims = gamma_dims(d, g);
      CHECK(dims.embed_dim == sum);
      CHECK(dims.exact);
      if (d >= 2) {
        double closed = (std::pow(double(d), g + 1) - d) / (d - 1);
        CHECK(dims.embed_dim == Approx(closed));
      }
    }
  }

  GammaDims big = gamma_dims(10, 24);
  CHECK_FALSE(big.exact);
  CHECK(big.embed_dim == Approx(1.111111111111111e24).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_dims(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gamma_dims(2, 0), std::invalid_argument);
}
