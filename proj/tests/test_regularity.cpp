#include <Eigen/SVD>
#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "karma/datagen.hpp"
#include "karma/regularity.hpp"
#include "support/generators.hpp"

using namespace karma;
using Catch::Approx;

namespace {

ObservedVector observe(const Eigen::VectorXd& x, const std::vector<int>& pattern) {
  std::vector<double> vals;
  for (int i : pattern) vals.push_back(x(i));
  return ObservedVector(static_cast<int>(x.size()), pattern, std::move(vals));
}

int svd_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  double t = static_cast<double>(std::max(m.rows(), m.cols())) *
             std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > t) ++r;
  return r;
}

Eigen::MatrixXd column_space_projector(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  double t = static_cast<double>(std::max(m.rows(), m.cols())) *
             std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > t) ++r;
  Eigen::MatrixXd u = svd.matrixU().leftCols(r);
  return u * u.transpose();
}

}  // namespace

TEST_CASE("fully observed data certifies lambda = 1") {
  std::mt19937_64 rng(61);
  SubspaceSpec e(5, testing::random_matrix(rng, 5, 2));
  std::vector<ObservedVector> data;
  std::vector<Eigen::VectorXd> fulls;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x = e.basis() * testing::random_matrix(rng, 2, 1).col(0);
    x /= std::max(1.0, x.norm() * 2.0);
    data.push_back(observe(x, {0, 1, 2, 3, 4}));
    fulls.push_back(x);
  }
  auto rep = check_regularity(data, e, fulls);
  CHECK(rep.kernel_ok);
  CHECK(rep.norm_ok);
  CHECK(rep.support_ok == CheckStatus::ok);
  CHECK(rep.lambda == Approx(1.0).margin(1e-10));
  REQUIRE(rep.per_pattern.size() == 1);
  CHECK(rep.per_pattern[0].count == 10);
}

TEST_CASE("a pattern blind to the subspace fails the kernel condition") {
  Eigen::MatrixXd b(3, 1);
  b << 1, 0, 0;  // E = span(e_0)
  SubspaceSpec e(3, b);
  // observing only coordinates orthogonal to E drops rank
  std::vector<ObservedVector> data{ObservedVector(3, {1, 2}, {0.1, 0.2})};
  auto rep = check_regularity(data, e);
  CHECK_FALSE(rep.kernel_ok);
  CHECK(rep.lambda == 0.0);
  CHECK(rep.support_ok == CheckStatus::unchecked);
}

TEST_CASE("lambda never exceeds one and drops to zero exactly with kernel_ok") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    int d = 2 + static_cast<int>(rng() % 5);
    int r = 1 + static_cast<int>(rng() % d);
    SubspaceSpec e(d, testing::random_matrix(rng, d, r));
    std::vector<ObservedVector> data;
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd x = e.basis() * testing::random_matrix(rng, r, 1).col(0);
      if (x.norm() > 1e-12) x /= x.norm();
      std::bernoulli_distribution keep(0.5);
      std::vector<int> pat;
      for (int c = 0; c < d; ++c)
        if (keep(rng)) pat.push_back(c);
      data.push_back(observe(x, pat));
    }
    auto rep = check_regularity(data, e);
    CHECK(rep.lambda <= 1.0 + 1e-10);
    CHECK((rep.lambda > 0.0) == rep.kernel_ok);
  }
}

TEST_CASE("distinct patterns deduplicate with counts in lexicographic order") {
  std::mt19937_64 rng(71);
  // all samples share one pattern
  std::vector<ObservedVector> same(7, ObservedVector(4, {1, 3}, {0.5, 0.5}));
  auto pats = distinct_patterns(same);
  REQUIRE(pats.size() == 1);
  CHECK(pats[0].first == std::vector<int>{1, 3});
  CHECK(pats[0].second == 7);

  // fully observed: the single pattern {0..d-1}
  std::vector<ObservedVector> dense(3, ObservedVector::dense({1, 2, 3}));
  auto dpats = distinct_patterns(dense);
  REQUIRE(dpats.size() == 1);
  CHECK(dpats[0].first == std::vector<int>{0, 1, 2});

  // the three instance types of the demo fixture
  auto fixture = matrix_m_fixture(5);
  std::vector<ObservedVector> inputs;
  for (const auto& ex : fixture) inputs.push_back(ex.input);
  auto fpats = distinct_patterns(inputs);
  REQUIRE(fpats.size() == 3);
  CHECK(fpats[0].first == std::vector<int>{0, 1, 2, 3});
  CHECK(fpats[1].first == std::vector<int>{0, 2});
  CHECK(fpats[2].first == std::vector<int>{1, 3});
  for (const auto& [pat, count] : fpats) CHECK(count == 5);
}

TEST_CASE("restricted rank equalities hold for every pattern") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 150; ++trial) {
    int d = 2 + static_cast<int>(rng() % 5);
    int r = 1 + static_cast<int>(rng() % d);
    SubspaceSpec e(d, testing::random_matrix(rng, d, r));
    std::bernoulli_distribution keep(0.6);
    std::vector<int> pat;
    for (int c = 0; c < d; ++c)
      if (keep(rng)) pat.push_back(c);
    if (pat.empty()) continue;
    const Eigen::MatrixXd& q = e.projection();
    Eigen::MatrixXd po = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pat.size()), d);
    for (std::size_t k = 0; k < pat.size(); ++k) po(static_cast<Eigen::Index>(k), pat[k]) = 1.0;

    int r1 = svd_rank(po * q);
    int r2 = svd_rank(q * po.transpose());
    int r3 = svd_rank(po * q * po.transpose());
    CHECK(r1 == r2);
    CHECK(r2 == r3);

    // when the rank is preserved, the column spaces of Q_oo and P_o Q agree
    if (r1 == e.rank()) {
      Eigen::MatrixXd p1 = column_space_projector(po * q * po.transpose());
      Eigen::MatrixXd p2 = column_space_projector(po * q);
      CHECK((p1 - p2).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("adding a sample never raises the certified lambda") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 40; ++trial) {
    int d = 4 + static_cast<int>(rng() % 3);
    int r = 2;
    SubspaceSpec e(d, testing::random_matrix(rng, d, r));
    std::vector<ObservedVector> data;
    double prev = 1.0;
    for (int i = 0; i < 8; ++i) {
      Eigen::VectorXd x = e.basis() * testing::random_matrix(rng, r, 1).col(0);
      if (x.norm() > 1e-12) x /= x.norm();
      std::bernoulli_distribution keep(0.7);
      std::vector<int> pat;
      for (int c = 0; c < d; ++c)
        if (keep(rng)) pat.push_back(c);
      data.push_back(observe(x, pat));
      auto rep = check_regularity(data, e);
      CHECK(rep.lambda <= prev + 1e-12);
      prev = rep.lambda;
    }
  }
}

TEST_CASE("norm and support conditions are reported honestly") {
  std::mt19937_64 rng(83);
  SubspaceSpec e(4, testing::random_matrix(rng, 4, 2));

  // a sample with ||P_o x|| > 1
  std::vector<ObservedVector> loud{ObservedVector(4, {0, 1}, {2.0, 0.0})};
  CHECK_FALSE(check_regularity(loud, e).norm_ok);

  // support check needs the full vectors
  Eigen::VectorXd inside = e.basis().col(0);
  Eigen::VectorXd outside = inside + 0.5 * (Eigen::MatrixXd::Identity(4, 4) - e.projection()) *
                                         testing::random_unit_vector(rng, 4);
  std::vector<ObservedVector> data{observe(inside, {0, 1, 2, 3})};
  CHECK(check_regularity(data, e).support_ok == CheckStatus::unchecked);
  std::vector<Eigen::VectorXd> good{inside};
  CHECK(check_regularity(data, e, good).support_ok == CheckStatus::ok);
  std::vector<Eigen::VectorXd> bad{outside};
  CHECK(check_regularity(data, e, bad).support_ok == CheckStatus::failed);

  CHECK_THROWS_AS(check_regularity(std::vector<ObservedVector>{}, e), std::invalid_argument);
}
