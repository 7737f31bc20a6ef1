#pragma once

// Shared randomized-input helpers for the test suites.

#include <Eigen/Core>
#include <random>
#include <vector>

#include "karma/core.hpp"
#include "karma/subspace.hpp"

namespace karma::testing {

inline ObservedVector random_observed(std::mt19937_64& rng, int d, double observe_prob = 0.5,
                                      double value_range = 1.0) {
  std::bernoulli_distribution obs(observe_prob);
  std::uniform_real_distribution<double> val(-value_range, value_range);
  std::vector<int> idx;
  std::vector<double> vals;
  for (int i = 0; i < d; ++i) {
    if (obs(rng)) {
      idx.push_back(i);
      vals.push_back(val(rng));
    }
  }
  return ObservedVector(d, std::move(idx), std::move(vals));
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
  return m;
}

inline Eigen::VectorXd random_unit_vector(std::mt19937_64& rng, int d) {
  Eigen::VectorXd v = random_matrix(rng, d, 1).col(0);
  while (v.norm() < 1e-9) v = random_matrix(rng, d, 1).col(0);
  return v / v.norm();
}

/// Orthogonal projector onto a random rank-r subspace.
inline Eigen::MatrixXd random_orthogonal_projector(std::mt19937_64& rng, int d, int r) {
  if (r == 0) return Eigen::MatrixXd::Zero(d, d);
  SubspaceSpec s(d, random_matrix(rng, d, r));
  return s.projection();
}

/// Oblique (non-orthogonal) projector Q = A (B^T A)^{-1} B^T with Q^2 = Q.
inline Eigen::MatrixXd random_oblique_projector(std::mt19937_64& rng, int d, int r) {
  for (;;) {
    Eigen::MatrixXd a = random_matrix(rng, d, r);
    Eigen::MatrixXd b = random_matrix(rng, d, r);
    Eigen::MatrixXd ba = b.transpose() * a;
    if (std::abs(ba.determinant()) < 1e-3) continue;
    return a * ba.inverse() * b.transpose();
  }
}

}  // namespace karma::testing
