#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "karma/core.hpp"
#include "karma/subspace.hpp"

namespace karma {

enum class CheckStatus { ok, failed, unchecked };

inline const char* check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::ok: return "ok";
    case CheckStatus::failed: return "failed";
    case CheckStatus::unchecked: return "unchecked";
  }
  return "?";
}

/// Per-pattern diagnostics for the regularity check.
///
/// `spectrum` holds the positive eigenvalues of the restricted projector
/// Q_{o,o} = P_o Q P_o^T (Q_{o,o} is symmetric PSD so these are also its
/// singular values; they equal the squared positive singular values of
/// P_o Q). The certified regularity constant is a bound on this spectrum:
/// that is the quantity the approximation and regret bounds contract with.
struct PatternStats {
  std::vector<int> pattern;
  std::size_t count = 0;
  std::vector<double> spectrum;  // descending, strictly positive
  int rank = 0;                  // numerical rank of P_o Q
  bool kernel_ok = false;        // rank(P_o Q) == rank(Q)
};

struct RegularityReport {
  double lambda = 0.0;  // min over patterns of the smallest entry of `spectrum`; 0 unless kernel_ok
  bool norm_ok = false;
  CheckStatus support_ok = CheckStatus::unchecked;
  bool kernel_ok = false;
  std::vector<PatternStats> per_pattern;
};

/// Deduplicated observation patterns with multiplicities, in lexicographic
/// order of the index sets.
inline std::vector<std::pair<std::vector<int>, std::size_t>> distinct_patterns(
    std::span<const ObservedVector> data) {
  std::map<std::vector<int>, std::size_t> counts;
  for (const auto& x : data) ++counts[x.observed()];
  return {counts.begin(), counts.end()};
}

namespace detail {

// numerical rank: count of singular values above max(rows, cols) * eps * s_max
inline int numerical_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double thresh = static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > thresh) ++r;
  return r;
}

// P_o Q: the observed rows of the projection matrix
inline Eigen::MatrixXd observed_rows(const std::vector<int>& pattern, const Eigen::MatrixXd& q) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pattern.size()), q.cols());
  for (std::size_t k = 0; k < pattern.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = q.row(pattern[k]);
  return m;
}

inline PatternStats analyze_pattern(const std::vector<int>& pattern, const SubspaceSpec& subspace) {
  PatternStats st;
  st.pattern = pattern;
  const Eigen::MatrixXd& q = subspace.projection();
  if (pattern.empty()) {
    st.rank = 0;
    st.kernel_ok = subspace.rank() == 0;
    return st;
  }
  Eigen::MatrixXd poq = observed_rows(pattern, q);
  st.rank = numerical_rank(poq);
  st.kernel_ok = st.rank == subspace.rank();

  const auto n = static_cast<Eigen::Index>(pattern.size());
  Eigen::MatrixXd qoo(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      qoo(i, j) = q(pattern[static_cast<std::size_t>(i)], pattern[static_cast<std::size_t>(j)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qoo, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double emax = ev.size() ? std::max(0.0, ev.maxCoeff()) : 0.0;
  const double thresh = static_cast<double>(std::max<Eigen::Index>(q.rows(), n)) *
                        std::numeric_limits<double>::epsilon() * emax;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
    if (ev(i) > thresh) st.spectrum.push_back(ev(i));
  }
  return st;
}

}  // namespace detail

/// Smallest positive eigenvalue of Q_{o,o} for one pattern, or 0 when the
/// pattern drops rank. Shared with the data generator, which
/// rejection-samples masks against exactly this check.
inline double pattern_lambda(const std::vector<int>& pattern, const SubspaceSpec& subspace) {
  PatternStats st = detail::analyze_pattern(pattern, subspace);
  if (!st.kernel_ok || st.spectrum.empty()) return 0.0;
  return st.spectrum.back();
}

/// Verify regularity of a dataset against a candidate subspace.
///
/// - norm_ok:    every ||P_o x|| <= 1 + tol
/// - support_ok: every ||(I - Q) x|| <= tol * ||x||; needs the full vectors,
///               reported `unchecked` when they are not supplied
/// - kernel_ok:  every pattern has rank(P_o Q) == rank(Q)
/// - lambda:     min over patterns of the smallest positive eigenvalue of
///               Q_{o,o}; 0 whenever kernel_ok fails
inline RegularityReport check_regularity(std::span<const ObservedVector> data,
                                         const SubspaceSpec& subspace,
                                         std::span<const Eigen::VectorXd> full_vectors = {},
                                         double tol = 1e-8) {
  if (data.empty()) throw std::invalid_argument("check_regularity: empty dataset");
  for (const auto& x : data) {
    if (x.dim() != subspace.dim()) throw std::invalid_argument("check_regularity: dimension mismatch");
  }
  if (!full_vectors.empty() && full_vectors.size() != data.size())
    throw std::invalid_argument("check_regularity: full vector count mismatch");

  RegularityReport rep;
  rep.norm_ok = true;
  for (const auto& x : data) {
    if (!(x.observed_norm() <= 1.0 + tol)) rep.norm_ok = false;
  }

  if (full_vectors.empty()) {
    rep.support_ok = CheckStatus::unchecked;
  } else {
    rep.support_ok = CheckStatus::ok;
    const Eigen::MatrixXd& q = subspace.projection();
    for (const auto& x : full_vectors) {
      if (x.size() != subspace.dim()) throw std::invalid_argument("check_regularity: full vector dim mismatch");
      if (((x - q * x).norm() > tol * x.norm())) rep.support_ok = CheckStatus::failed;
    }
  }

  rep.kernel_ok = true;
  double lam = std::numeric_limits<double>::infinity();
  for (auto& [pattern, count] : distinct_patterns(data)) {
    PatternStats st = detail::analyze_pattern(pattern, subspace);
    st.count = count;
    if (!st.kernel_ok) rep.kernel_ok = false;
    if (!st.spectrum.empty()) lam = std::min(lam, st.spectrum.back());
    rep.per_pattern.push_back(std::move(st));
  }
  rep.lambda = rep.kernel_ok && std::isfinite(lam) ? lam : 0.0;
  return rep;
}

}  // namespace karma
