#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <string>
#include <vector>

#include "covstruct/errors.hpp"
#include "covstruct/sym_matrix.hpp"

namespace covstruct::conic {

// Length of svec(M) for a dim x dim symmetric M.
int svec_len(int dim);

// Inverse of svec_len; throws InvalidInput if len is not triangular.
int svec_dim(int len);

// Scaled vectorization of a symmetric matrix: the upper triangle read in
// column-major order ((0,0), (0,1), (1,1), (0,2), ...), off-diagonal entries
// multiplied by sqrt(2). With this scaling svec(M).dot(svec(N)) equals the
// Frobenius inner product <M, N>, so vector 2-norms of svecs are Frobenius
// norms of matrices.
Eigen::VectorXd svec(const SymMatrix& m);
SymMatrix smat(const Eigen::VectorXd& v);

// Cone layout for the slack vector, fixed row order: zero rows first, then
// nonnegative rows, then PSD blocks. Each PSD block of dimension d occupies
// svec_len(d) consecutive rows holding the svec of the slack matrix.
struct ConeSpec {
  int zero_dim = 0;
  int nonneg_dim = 0;
  std::vector<int> psd_block_dims;

  int total_dim() const;
};

// Named span of the primal variable vector; diagnostics only.
struct VarSlice {
  std::string name;
  int offset = 0;
  int len = 0;
};

// minimize c'z  subject to  A z + s = b,  s in K.
struct ConicProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;  // cone.total_dim() rows, c.size() cols
  Eigen::VectorXd b;
  ConeSpec cone;
  std::vector<VarSlice> var_map;
};

enum class SolveStatus { Optimal, MaxIters, Infeasible, Unbounded };

const char* to_string(SolveStatus s);

struct SolveOptions {
  double eps_abs = 1e-7;
  double eps_rel = 1e-6;
  int max_iters = 50000;
  // Extra uniform row scaling applied on top of equilibration. Tunes the
  // primal/dual balance of the iteration; has no effect on the reported
  // solution or residuals, which are always measured on the original data.
  double scale = 1.0;
};

struct ConicSolution {
  Eigen::VectorXd z;  // primal variables
  Eigen::VectorXd s;  // slacks; in K exactly (post-projection)
  Eigen::VectorXd y;  // duals; in K* exactly
  SolveStatus status = SolveStatus::MaxIters;
  double objective = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

// Euclidean projection onto K. Throws InvalidInput on length mismatch.
Eigen::VectorXd project_cone(const Eigen::VectorXd& s, const ConeSpec& k);

// Projection onto the dual cone K* (zero rows become free, nonneg and PSD
// are self-dual). Exposed for tests of the solver's dual iterates.
Eigen::VectorXd project_dual_cone(const Eigen::VectorXd& y, const ConeSpec& k);

// Operator-splitting solver on the homogeneous self-dual embedding of the
// primal-dual pair. Termination tests and infeasibility certificates are
// evaluated on the original problem data at the stated tolerances:
//   primal:  ||Az + s - b||      <= eps_abs + eps_rel * max(||Az||, ||s||, ||b||)
//   dual:    ||A'y + c||         <= eps_abs + eps_rel * max(||A'y||, ||c||)
//   gap:     |c'z + b'y|         <= eps_abs + eps_rel * max(|c'z|, |b'y|)
//   infeasible: b'y < 0 and ||A'y|| * ||b|| <= eps_abs * (-b'y)
//   unbounded:  c'z < 0 and ||Az + s|| * ||c|| <= eps_abs * (-c'z)
ConicSolution solve(const ConicProblem& problem, const SolveOptions& opts = {});

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

// Recomputes the three residuals above from (problem, solution) directly.
// Shares no state with the solver loop; used to audit reported solutions.
KktResiduals kkt_residuals(const ConicProblem& problem,
                           const ConicSolution& sol);

// Plain-text dump of the problem data (dimensions, cone layout, variable
// slices, c, b, and A in triplet form) for offline cross-checking against
// other solvers. Format documented in the README.
void dump_problem(const ConicProblem& problem, std::ostream& os);

}  // namespace covstruct::conic
