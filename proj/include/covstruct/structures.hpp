#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "covstruct/errors.hpp"
#include "covstruct/sym_matrix.hpp"

namespace covstruct {

// Convex structure constraints on a covariance (shape) matrix. Every kind
// describes a closed convex set of symmetric matrices that contains scalar
// multiples of its members where applicable; estimators intersect it with
// the PSD cone and the trace-one slice.
struct StructureSpec {
  enum class Kind {
    Unconstrained,
    Toeplitz,           // constant diagonals
    Banded,             // entries beyond bandwidth k are zero
    LowRankPlusNoise,   // C = X + sigma2*I, X PSD, trace(X) <= beta
    LinearParam,        // C = sum_i p_i a_i a_i^T, p_i >= 0, sum p_i <= beta
  };

  Kind kind = Kind::Unconstrained;
  int bandwidth = 0;                   // Banded
  double sigma2 = 0.0;                 // LowRankPlusNoise
  double beta = 0.0;                   // LowRankPlusNoise, LinearParam
  std::vector<Eigen::VectorXd> atoms;  // LinearParam

  static StructureSpec unconstrained();
  static StructureSpec toeplitz();
  static StructureSpec banded(int k);
  static StructureSpec low_rank_plus_noise(double sigma2, double beta);
  static StructureSpec linear_param(std::vector<Eigen::VectorXd> atoms,
                                    double beta);
};

// Affine description of a structure over the variable vector
//   [ svec(C) | auxiliary nonneg | auxiliary PSD blocks (svec slices) ],
// as equality rows eq * vars = rhs plus cone memberships of the auxiliary
// parts. Inequalities are encoded with nonnegative slack variables.
struct AffineConstraintSet {
  int dim = 0;       // matrix dimension p
  int sym_len = 0;   // svec length for C
  int aux_nonneg = 0;
  std::vector<int> aux_psd_dims;
  Eigen::SparseMatrix<double> eq;  // rows x total_vars()
  Eigen::VectorXd rhs;

  int total_vars() const;
};

// Compiles the structure into affine form for dimension p. Throws
// InvalidSpec when the spec is malformed for p.
AffineConstraintSet compile_constraints(const StructureSpec& spec, int p);

// Membership test: is M in the structure set, with equality residuals and
// auxiliary feasibility measured to within tol?
bool contains(const StructureSpec& spec, const SymMatrix& m, double tol = 1e-9);

// Frobenius projection of M onto the affine-equality part of the structure
// (Toeplitz: average the diagonals; Banded: zero outside the band;
// Unconstrained: identity). Kinds with auxiliary cone constraints are not
// plain linear projections; those throw UnsupportedSpec.
SymMatrix project_frobenius(const StructureSpec& spec, const SymMatrix& m);

// rho^|i-j| Toeplitz correlation target, rho in (0, 1).
SymMatrix make_toeplitz_target(int p, double rho);

struct BandedTarget {
  SymMatrix matrix;
  double min_eigenvalue = 0.0;  // of the raw construction
  double shift = 0.0;           // diagonal shift applied (0 when already PSD)
};

// Symmetric pentadiagonal benchmark target: diagonal 21..20+p, first and
// second off-diagonals 1..p-1 and 1..p-2. Positive definite for the sizes
// used here; if an extension ever dips below PSD the diagonal is shifted and
// the shift is reported.
BandedTarget make_banded_target(int p = 20);

}  // namespace covstruct
