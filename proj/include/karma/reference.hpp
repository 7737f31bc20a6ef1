#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <span>
#include <stdexcept>
#include <vector>

#include "karma/core.hpp"
#include "karma/kernel.hpp"
#include "karma/subspace.hpp"

// Dense reference predictors over a known subspace. These are ground-truth
// comparators and test oracles; nothing here is ever trained and the online
// learner never sees them.

namespace karma {

namespace detail {

inline Eigen::VectorXd restrict_to(const std::vector<int>& idx, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  return out;
}

// Q_{o,o} = P_o Q P_o^T
inline Eigen::MatrixXd restrict_to(const std::vector<int>& idx, const Eigen::MatrixXd& q) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = q(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace detail

/// Predicts (P_o w) . Q_{o,o}^+ . (P_o x): a linear rule composed with the
/// pseudo-inverse reconstruction of the subspace restriction. The expected
/// operating range is ||w|| <= 1, but larger weights are accepted (the
/// reconstruction identity is linear in w and comparator tests rescale by
/// achieved margins).
struct PinvPredictor {
  Eigen::VectorXd w;
  SubspaceSpec subspace;
  double pinv_tolerance = 1e-10;  // relative singular-value cutoff
};

inline double predict(const PinvPredictor& p, const ObservedVector& x) {
  if (x.dim() != p.subspace.dim()) throw std::invalid_argument("predict: dimension mismatch");
  if (x.observed().empty()) return 0.0;
  const auto& o = x.observed();
  Eigen::VectorXd xo = Eigen::Map<const Eigen::VectorXd>(x.values().data(),
                                                         static_cast<Eigen::Index>(o.size()));
  Eigen::VectorXd wo = detail::restrict_to(o, p.w);
  Eigen::MatrixXd qoo = detail::restrict_to(o, p.subspace.projection());
  // Q_{o,o} is symmetric PSD: pseudo-inverse through its eigendecomposition,
  // zeroing eigenvalues below pinv_tolerance * max.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qoo);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = p.pinv_tolerance * std::max(0.0, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd a = es.eigenvectors().transpose() * xo;
  Eigen::VectorXd b = es.eigenvectors().transpose() * wo;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > cutoff) acc += a(i) * b(i) / ev(i);
  }
  return acc;
}

/// Predicts (P_o w) . [sum_{j=0}^{gamma-1} (Q_{o,o})^j] . (P_o x): the
/// truncated power-series surrogate of the pseudo-inverse rule. Works for any
/// idempotent Q (including oblique projectors); powers are applied to the
/// vector, never formed as matrices.
struct SeriesPredictor {
  Eigen::VectorXd w;
  Eigen::MatrixXd projector;  // any Q with Q^2 = Q
  int gamma = 1;
};

inline double predict(const SeriesPredictor& p, const ObservedVector& x) {
  if (x.dim() != p.projector.rows()) throw std::invalid_argument("predict: dimension mismatch");
  if (p.gamma < 1) throw std::invalid_argument("predict: gamma must be >= 1");
  if (x.observed().empty()) return 0.0;
  const auto& o = x.observed();
  Eigen::VectorXd cur = Eigen::Map<const Eigen::VectorXd>(x.values().data(),
                                                          static_cast<Eigen::Index>(o.size()));
  Eigen::VectorXd wo = detail::restrict_to(o, p.w);
  Eigen::MatrixXd qoo = detail::restrict_to(o, p.projector);
  Eigen::VectorXd acc = cur;
  for (int j = 1; j < p.gamma; ++j) {
    cur = qoo * cur;
    acc += cur;
  }
  return wo.dot(acc);
}

/// Lifts a (w, Q) series predictor into explicit embedding coordinates:
/// v_s = w_{s_1} * Q_{s_1,s_2} * ... * Q_{s_{|s|-1}, s_end}, so that
/// v . phi_gamma(x_o) reproduces the series prediction for every x_o, with
/// ||v|| <= sqrt(Gamma) ||w|| whenever max |Q_ij| <= 1.
inline Eigen::VectorXd lift_to_embedding(const Eigen::VectorXd& w, const Eigen::MatrixXd& projector,
                                         int gamma, double cap = 1e6) {
  const int d = static_cast<int>(w.size());
  if (projector.rows() != d || projector.cols() != d)
    throw std::invalid_argument("lift_to_embedding: projector shape mismatch");
  GammaDims dims = gamma_dims(d, gamma);
  detail::check_embed_cap(dims, cap, "lift_to_embedding");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.embed_dim));

  // depth-first over sequence prefixes, carrying the running product and the
  // within-length relative index (child index = rel * d + e, next block
  // starts after this one)
  struct Frame {
    int last;
    int len;
    std::size_t rel;
    double val;
  };
  std::vector<Frame> stack;
  std::vector<std::size_t> offsets(static_cast<std::size_t>(gamma) + 1, 0);
  {
    std::size_t block = 1, acc = 0;
    for (int l = 1; l <= gamma; ++l) {
      offsets[static_cast<std::size_t>(l)] = acc;
      block *= static_cast<std::size_t>(d);
      acc += block;
    }
  }
  for (int i = 0; i < d; ++i) {
    double val = w(i);
    v(static_cast<Eigen::Index>(offsets[1] + static_cast<std::size_t>(i))) = val;
    stack.push_back({i, 1, static_cast<std::size_t>(i), val});
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      if (f.len == gamma) continue;
      for (int e = 0; e < d; ++e) {
        double child = f.val * projector(f.last, e);
        std::size_t rel = f.rel * static_cast<std::size_t>(d) + static_cast<std::size_t>(e);
        v(static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(f.len + 1)] + rel)) = child;
        stack.push_back({e, f.len + 1, rel, child});
      }
    }
  }
  return v;
}

}  // namespace karma
