#pragma once

#include <Eigen/Dense>

#include "covstruct/errors.hpp"

namespace covstruct {

// Dense real symmetric matrix, the carrier for covariance and shape
// matrices. Construction symmetrizes the input as (M + M^T)/2, which makes
// entries (i,j) and (j,i) bitwise equal.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw InvalidInput("SymMatrix: input must be square and nonempty");
    mat_ = 0.5 * (m + m.transpose().eval());
  }

  static SymMatrix identity(int p) {
    require_dim(p);
    return SymMatrix(Eigen::MatrixXd::Identity(p, p));
  }

  static SymMatrix zero(int p) {
    require_dim(p);
    return SymMatrix(Eigen::MatrixXd::Zero(p, p));
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  bool empty() const { return mat_.rows() == 0; }
  double operator()(int i, int j) const { return mat_(i, j); }
  const Eigen::MatrixXd& mat() const { return mat_; }
  double trace() const { return mat_.trace(); }
  bool all_finite() const { return mat_.allFinite(); }

 private:
  static void require_dim(int p) {
    if (p < 1) throw InvalidInput("SymMatrix: dimension must be >= 1");
  }

  Eigen::MatrixXd mat_;
};

struct EigenPair {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns; M = V diag(values) V^T
};

// Full symmetric eigendecomposition. Throws InvalidInput on non-finite
// entries or an empty matrix.
EigenPair eig_sym(const SymMatrix& m);

// Largest absolute eigenvalue.
double spectral_norm(const SymMatrix& m);

// Entrywise l2 norm.
double frobenius_norm(const SymMatrix& m);

// M / trace(M). Throws DegenerateScale unless trace(M) > 0.
SymMatrix trace_normalize(const SymMatrix& m);

// Rescales `estimate` so its trace matches `truth`'s. Both traces must be
// positive. Used before computing estimation errors, since shape matrices
// are only identified up to scale.
SymMatrix align_scale(const SymMatrix& estimate, const SymMatrix& truth);

}  // namespace covstruct
