#include "covstruct/sym_matrix.hpp"

namespace covstruct {

EigenPair eig_sym(const SymMatrix& m) {
  if (m.empty()) throw InvalidInput("eig_sym: empty matrix");
  if (!m.all_finite()) throw InvalidInput("eig_sym: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success)
    throw Error("eig_sym: eigendecomposition failed to converge");
  return EigenPair{es.eigenvalues(), es.eigenvectors()};
}

double spectral_norm(const SymMatrix& m) {
  const EigenPair ep = eig_sym(m);
  return ep.values.cwiseAbs().maxCoeff();
}

double frobenius_norm(const SymMatrix& m) {
  if (m.empty()) throw InvalidInput("frobenius_norm: empty matrix");
  return m.mat().norm();
}

SymMatrix trace_normalize(const SymMatrix& m) {
  if (m.empty()) throw InvalidInput("trace_normalize: empty matrix");
  if (!m.all_finite()) throw InvalidInput("trace_normalize: non-finite entries");
  const double t = m.trace();
  if (!(t > 0.0)) throw DegenerateScale("trace_normalize: trace must be positive");
  return SymMatrix(m.mat() / t);
}

SymMatrix align_scale(const SymMatrix& estimate, const SymMatrix& truth) {
  if (estimate.dim() != truth.dim())
    throw InvalidInput("align_scale: dimension mismatch");
  const double te = estimate.trace();
  const double tt = truth.trace();
  if (!(te > 0.0) || !(tt > 0.0))
    throw DegenerateScale("align_scale: traces must be positive");
  return SymMatrix(estimate.mat() * (tt / te));
}

}  // namespace covstruct
