#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace karma {

/// An r-dimensional subspace of R^d, held as an orthonormal basis plus the
/// derived projection matrix Q = B B^T. User-supplied bases are
/// re-orthonormalized (modified Gram-Schmidt, two passes) and dependent
/// columns dropped, so the orthonormality and idempotence invariants hold by
/// construction.
class SubspaceSpec {
 public:
  SubspaceSpec(int dim, const Eigen::MatrixXd& basis_candidates) : dim_(dim) {
    if (dim_ < 1) throw std::invalid_argument("SubspaceSpec: dim must be >= 1");
    if (basis_candidates.rows() != dim_)
      throw std::invalid_argument("SubspaceSpec: basis rows must equal dim");
    basis_ = orthonormalize(basis_candidates);
    if (basis_.cols() == 0) throw std::invalid_argument("SubspaceSpec: basis spans nothing");
    projection_ = basis_ * basis_.transpose();
  }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& projection() const { return projection_; }

 private:
  static Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& cand) {
    Eigen::MatrixXd b(cand.rows(), cand.cols());
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < cand.cols(); ++j) {
      Eigen::VectorXd v = cand.col(j);
      const double orig = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index k = 0; k < kept; ++k) v -= b.col(k).dot(v) * b.col(k);
      }
      const double rn = v.norm();
      if (rn <= 1e-12 * std::max(1.0, orig)) continue;  // dependent column
      b.col(kept++) = v / rn;
    }
    return b.leftCols(kept);
  }

  int dim_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd projection_;
};

/// Q^2 == Q up to tol, entrywise.
inline bool is_projection(const Eigen::MatrixXd& q, double tol = 1e-8) {
  if (q.rows() != q.cols()) return false;
  return ((q * q) - q).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace karma
