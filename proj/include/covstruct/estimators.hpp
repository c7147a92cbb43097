#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>

#include "covstruct/conic.hpp"
#include "covstruct/errors.hpp"
#include "covstruct/sampler.hpp"
#include "covstruct/structures.hpp"
#include "covstruct/sym_matrix.hpp"

namespace covstruct {

enum class MatrixNorm { Spectral, Frobenius };

const char* to_string(MatrixNorm n);

struct EstimatorResult {
  SymMatrix shape;  // trace-normalized, PSD
  double objective = 0.0;        // COCA / projection only
  Eigen::VectorXd d_values;      // COCA only; empty otherwise
  int iterations = 0;
  conic::SolveStatus status = conic::SolveStatus::Optimal;
  std::map<std::string, double> diagnostics;
  // Projection: the minimizer before trace normalization.
  std::optional<SymMatrix> raw_shape;
};

// (1/n) sum x_i x_i^T, trace-normalized. Diagnostics record the
// pre-normalization trace.
EstimatorResult sample_covariance(const SampleSet& x);

// f(C) = (p/n) sum x_i x_i^T / (x_i' C^{-1} x_i). Requires C positive
// definite (min eigenvalue > 1e-12 * ||C||) and nonzero samples.
SymMatrix moment_map(const SymMatrix& c, const SampleSet& x);

// Fixed point of C = trace_normalize(f(C)) from C0 = I/p. Throws NotExist
// for n < p; n == p is attempted with conditioning flagged in diagnostics.
// When the iteration budget runs out, status is MaxIters and the best
// iterate is returned.
EstimatorResult tyler(const SampleSet& x, double tol = 1e-10,
                      int max_iter = 10000);

// min_{M in S, M PSD} ||M - chat|| via the conic solver. The reported shape
// is trace-normalized; raw_shape/objective keep the actual minimizer.
EstimatorResult project_estimator(const SymMatrix& chat,
                                  const StructureSpec& spec, MatrixNorm norm,
                                  const conic::SolveOptions& opts = {});

// Convex covariance matching: minimize ||C - (1/n) sum d_i x_i x_i^T|| over
// trace-one C in the structure set, subject to C >= (d_i/p) x_i x_i^T and
// d_i >= 0. Works for any n >= 1, including n < p.
EstimatorResult coca(const SampleSet& x, const StructureSpec& spec,
                     MatrixNorm norm, const conic::SolveOptions& opts = {});

// The conic program coca() solves, before solving it. Variable slices are
// named in var_map; samples are unit-normalized inside, as in coca().
conic::ConicProblem coca_problem(const SampleSet& x, const StructureSpec& spec,
                                 MatrixNorm norm);

// Per-sample slack of the relaxed moment equalities at a COCA solution,
// reported in the unit-sample gauge (u_i = x_i / ||x_i||, and d_i scaled
// back to that gauge):
//   g_i = p / (u_i' C^{-1} u_i) - d_i ||x_i||^2.
// This makes g invariant under positive rescaling of individual samples and
// keeps its accuracy at the solver-residual level; g_i >= -tol for feasible
// output, with equality gaps ~0 in the unconstrained n >= p case.
Eigen::VectorXd relaxation_gap(const EstimatorResult& result,
                               const SampleSet& x);

}  // namespace covstruct
