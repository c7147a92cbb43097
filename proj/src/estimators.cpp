#include "covstruct/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace covstruct {

const char* to_string(MatrixNorm n) {
  switch (n) {
    case MatrixNorm::Spectral: return "spectral";
    case MatrixNorm::Frobenius: return "frobenius";
  }
  return "unknown";
}

namespace {

inline int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

constexpr double kSqrt2 = 1.4142135623730950488;

// Incremental assembly of (A, b). Rows are appended strictly in cone order:
// zero rows, nonneg rows, PSD blocks.
struct Builder {
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> rhs;
  int rows = 0;

  int new_row(double b) {
    rhs.push_back(b);
    return rows++;
  }
  void add(int r, int c, double v) {
    if (v != 0.0) trip.emplace_back(r, c, v);
  }
  void finish(conic::ConicProblem& prob, int nvar) const {
    prob.A.resize(rows, nvar);
    prob.A.setFromTriplets(trip.begin(), trip.end());
    prob.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
  }
};

// Sparse affine symmetric-matrix expression V(z) = smat(P z + q) in svec
// coordinates; feeds the norm-epigraph emitters.
struct AffineResidual {
  int len;
  std::vector<std::vector<std::pair<int, double>>> p;  // per-coordinate terms
  Eigen::VectorXd q;

  explicit AffineResidual(int l) : len(l), p(l), q(Eigen::VectorXd::Zero(l)) {}
  void add(int r, int col, double coef) {
    if (coef != 0.0) p[r].emplace_back(col, coef);
  }
};

// t >= ||V||_2 as two PSD blocks: t*I - V >= 0 and t*I + V >= 0.
void emit_spectral_epigraph(Builder& bl, const AffineResidual& v, int t_col,
                            int dim) {
  for (const double sg : {1.0, -1.0}) {
    for (int j = 0; j < dim; ++j) {
      for (int i = 0; i <= j; ++i) {
        const int r = svec_index(i, j);
        const int row = bl.new_row(-sg * v.q[r]);
        for (const auto& [col, coef] : v.p[r]) bl.add(row, col, sg * coef);
        if (i == j) bl.add(row, t_col, -1.0);
      }
    }
  }
}

// t >= ||V||_F as one PSD block of dimension len+1 in arrow form
// [[t, v'], [v, t*I]], with v the svec coordinates of V.
void emit_frobenius_epigraph(Builder& bl, const AffineResidual& v, int t_col) {
  const int d = v.len + 1;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        const int row = bl.new_row(0.0);
        bl.add(row, t_col, -1.0);
      } else if (i == 0) {
        const int r = j - 1;
        const int row = bl.new_row(kSqrt2 * v.q[r]);
        for (const auto& [col, coef] : v.p[r]) bl.add(row, col, -kSqrt2 * coef);
      } else {
        bl.new_row(0.0);  // structural zero of the arrow pattern
      }
    }
  }
}

// Appends the structure equality rows, remapping auxiliary columns of the
// constraint set (which start at cs.sym_len) to start at aux_base.
void emit_structure_rows(Builder& bl, const AffineConstraintSet& cs,
                         int aux_base) {
  const int base = bl.rows;
  for (int r = 0; r < cs.eq.rows(); ++r) bl.new_row(cs.rhs[r]);
  for (int c = 0; c < cs.eq.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(cs.eq, c); it; ++it) {
      const int col = (c < cs.sym_len) ? c : aux_base + (c - cs.sym_len);
      bl.add(base + static_cast<int>(it.row()), col, it.value());
    }
  }
}

void emit_aux_nonneg_rows(Builder& bl, const AffineConstraintSet& cs,
                          int aux_nonneg_col0) {
  for (int i = 0; i < cs.aux_nonneg; ++i) {
    const int row = bl.new_row(0.0);
    bl.add(row, aux_nonneg_col0 + i, -1.0);
  }
}

void emit_aux_psd_blocks(Builder& bl, const AffineConstraintSet& cs,
                         int aux_psd_col0) {
  int col = aux_psd_col0;
  for (const int d : cs.aux_psd_dims) {
    const int len = conic::svec_len(d);
    for (int k = 0; k < len; ++k) {
      const int row = bl.new_row(0.0);
      bl.add(row, col + k, -1.0);
    }
    col += len;
  }
}

// Eigenvalue clip to the PSD cone followed by exact trace normalization;
// returns the polished shape and reports the pre-polish state.
SymMatrix polish_shape(const SymMatrix& raw, double* pre_trace,
                       double* pre_min_eig) {
  *pre_trace = raw.trace();
  const EigenPair ep = eig_sym(raw);
  *pre_min_eig = ep.values.minCoeff();
  if (*pre_min_eig >= 0.0) return trace_normalize(raw);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(raw.dim(), raw.dim());
  for (int k = 0; k < raw.dim(); ++k) {
    if (ep.values[k] > 0.0)
      m.selfadjointView<Eigen::Lower>().rankUpdate(ep.vectors.col(k),
                                                   ep.values[k]);
  }
  Eigen::MatrixXd full = m.selfadjointView<Eigen::Lower>();
  return trace_normalize(SymMatrix(full));
}

// Termination-tolerance scales of the original problem at this solution,
// mirroring the solver's convergence test; stored in diagnostics so callers
// can audit reported solutions with kkt_residuals.
void record_solution_diagnostics(const conic::ConicProblem& prob,
                                 const conic::ConicSolution& sol,
                                 const conic::SolveOptions& opts,
                                 std::map<std::string, double>& diag) {
  const conic::KktResiduals kkt = conic::kkt_residuals(prob, sol);
  const Eigen::VectorXd ax = prob.A * sol.z;
  const Eigen::VectorXd aty = prob.A.transpose() * sol.y;
  const double ctx = prob.c.dot(sol.z);
  const double bty = prob.b.dot(sol.y);
  diag["kkt_primal"] = kkt.primal;
  diag["kkt_dual"] = kkt.dual;
  diag["kkt_gap"] = kkt.gap;
  diag["tol_primal"] = opts.eps_abs + opts.eps_rel * std::max({ax.norm(), sol.s.norm(),
                                                               prob.b.norm()});
  diag["tol_dual"] =
      opts.eps_abs + opts.eps_rel * std::max(aty.norm(), prob.c.norm());
  diag["tol_gap"] = opts.eps_abs +
                    opts.eps_rel * std::max(std::abs(ctx), std::abs(bty));
  diag["solver_primal_res"] = sol.primal_res;
  diag["solver_dual_res"] = sol.dual_res;
  diag["solver_gap"] = sol.gap;
  diag["solver_iterations"] = static_cast<double>(sol.iterations);
}

}  // namespace

EstimatorResult sample_covariance(const SampleSet& x) {
  if (x.count() < 1 || x.dim() < 1)
    throw InvalidInput("sample_covariance: empty sample set");
  if (!x.samples.allFinite())
    throw InvalidInput("sample_covariance: non-finite samples");
  const double n = static_cast<double>(x.count());
  const SymMatrix m(Eigen::MatrixXd((x.samples * x.samples.transpose()) / n));
  EstimatorResult res;
  res.diagnostics["pre_normalization_trace"] = m.trace();
  res.shape = trace_normalize(m);
  res.status = conic::SolveStatus::Optimal;
  return res;
}

SymMatrix moment_map(const SymMatrix& c, const SampleSet& x) {
  const int p = c.dim();
  if (x.dim() != p) throw InvalidInput("moment_map: dimension mismatch");
  if (x.count() < 1) throw InvalidInput("moment_map: empty sample set");
  const EigenPair ep = eig_sym(c);
  const double top = ep.values.cwiseAbs().maxCoeff();
  if (ep.values.minCoeff() <= 1e-12 * top)
    throw SingularMatrix("moment_map: C is numerically singular");

  // q_j = x_j' C^{-1} x_j through the eigenbasis.
  const Eigen::MatrixXd g = ep.vectors.transpose() * x.samples;
  Eigen::VectorXd q(x.count());
  for (int j = 0; j < x.count(); ++j) {
    double s = 0.0;
    for (int k = 0; k < p; ++k) s += g(k, j) * g(k, j) / ep.values[k];
    if (!(s > 0.0)) throw DegenerateSample("moment_map: zero sample");
    q[j] = s;
  }
  const Eigen::MatrixXd acc =
      x.samples * q.cwiseInverse().asDiagonal() * x.samples.transpose();
  return SymMatrix(Eigen::MatrixXd(acc * (static_cast<double>(p) / x.count())));
}

EstimatorResult tyler(const SampleSet& x, double tol, int max_iter) {
  const int p = x.dim();
  const int n = x.count();
  if (p < 1 || n < 1) throw InvalidInput("tyler: empty sample set");
  if (!(tol > 0.0)) throw InvalidInput("tyler: tol must be positive");
  if (max_iter < 1) throw InvalidInput("tyler: max_iter must be >= 1");
  if (n < p)
    throw NotExist("tyler: estimator does not exist for n < p");

  EstimatorResult res;
  if (p == 1) {
    res.shape = SymMatrix::identity(1);
    res.diagnostics["fixed_point_residual"] = 0.0;
    return res;
  }

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.samples);
    if (qr.rank() < p)
      throw DegenerateData("tyler: samples do not span the space");
  }

  if (n == p) res.diagnostics["n_equals_p"] = 1.0;

  SymMatrix c = SymMatrix(Eigen::MatrixXd::Identity(p, p) / p);
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    SymMatrix next;
    try {
      next = trace_normalize(moment_map(c, x));
    } catch (const SingularMatrix&) {
      // Iterates can collapse at the n == p existence boundary; surface as
      // non-convergence with the last usable iterate.
      res.shape = c;
      res.status = conic::SolveStatus::MaxIters;
      res.iterations = it;
      res.diagnostics["fixed_point_residual"] = resid;
      res.diagnostics["singular_iterate"] = 1.0;
      return res;
    }
    resid = frobenius_norm(SymMatrix(next.mat() - c.mat()));
    if (resid <= tol) {
      res.shape = c;
      res.status = conic::SolveStatus::Optimal;
      res.iterations = it;
      res.diagnostics["fixed_point_residual"] = resid;
      const EigenPair ep = eig_sym(c);
      res.diagnostics["condition"] =
          ep.values.maxCoeff() / std::max(ep.values.minCoeff(), 1e-300);
      return res;
    }
    c = next;
  }
  res.shape = c;
  res.status = conic::SolveStatus::MaxIters;
  res.iterations = max_iter;
  res.diagnostics["fixed_point_residual"] = resid;
  return res;
}

EstimatorResult project_estimator(const SymMatrix& chat,
                                  const StructureSpec& spec, MatrixNorm norm,
                                  const conic::SolveOptions& opts) {
  const int p = chat.dim();
  if (p < 1 || !chat.all_finite())
    throw InvalidInput("project_estimator: bad input matrix");
  const AffineConstraintSet cs = compile_constraints(spec, p);
  const int l = cs.sym_len;
  const int t_col = l;
  const int aux_nn0 = l + 1;
  const int aux_psd0 = aux_nn0 + cs.aux_nonneg;
  const int nvar = cs.total_vars() + 1;

  Builder bl;
  emit_structure_rows(bl, cs, aux_nn0);
  const int zero_rows = bl.rows;
  emit_aux_nonneg_rows(bl, cs, aux_nn0);

  // PSD block: M itself.
  for (int r = 0; r < l; ++r) {
    const int row = bl.new_row(0.0);
    bl.add(row, r, -1.0);
  }
  emit_aux_psd_blocks(bl, cs, aux_psd0);

  AffineResidual v(l);
  for (int r = 0; r < l; ++r) v.add(r, r, 1.0);
  v.q = -conic::svec(chat);
  if (norm == MatrixNorm::Spectral) {
    emit_spectral_epigraph(bl, v, t_col, p);
  } else {
    emit_frobenius_epigraph(bl, v, t_col);
  }

  conic::ConicProblem prob;
  prob.c = Eigen::VectorXd::Zero(nvar);
  prob.c[t_col] = 1.0;
  bl.finish(prob, nvar);
  prob.cone.zero_dim = zero_rows;
  prob.cone.nonneg_dim = cs.aux_nonneg;
  prob.cone.psd_block_dims.push_back(p);
  for (int d : cs.aux_psd_dims) prob.cone.psd_block_dims.push_back(d);
  if (norm == MatrixNorm::Spectral) {
    prob.cone.psd_block_dims.push_back(p);
    prob.cone.psd_block_dims.push_back(p);
  } else {
    prob.cone.psd_block_dims.push_back(l + 1);
  }
  prob.var_map = {{"M", 0, l},
                  {"t", t_col, 1},
                  {"aux_nonneg", aux_nn0, cs.aux_nonneg},
                  {"aux_psd", aux_psd0, nvar - aux_psd0}};

  const conic::ConicSolution sol = conic::solve(prob, opts);
  if (sol.status == conic::SolveStatus::Infeasible)
    throw InfeasibleStructure("project_estimator: empty feasible set");
  if (sol.status == conic::SolveStatus::Unbounded)
    throw Error("project_estimator: unbounded program (malformed data)");

  EstimatorResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.objective = sol.objective;
  const SymMatrix raw = conic::smat(sol.z.head(l));
  res.raw_shape = raw;
  double pre_trace = 0.0, pre_min = 0.0;
  res.shape = polish_shape(raw, &pre_trace, &pre_min);
  res.diagnostics["unnormalized_trace"] = pre_trace;
  res.diagnostics["pre_polish_min_eig"] = pre_min;
  record_solution_diagnostics(prob, sol, opts, res.diagnostics);
  return res;
}

conic::ConicProblem coca_problem(const SampleSet& x, const StructureSpec& spec,
                                 MatrixNorm norm) {
  const int p = x.dim();
  const int n = x.count();
  if (p < 1 || n < 1) throw InvalidInput("coca: empty sample set");
  if (!x.samples.allFinite()) throw InvalidInput("coca: non-finite samples");

  // Internally the samples are normalized to unit length: the feasible set
  // and objective are invariant under per-sample positive scaling once d_i
  // absorbs 1/||x_i||^2, and unit-norm data keeps the LMI blocks uniformly
  // scaled. The reported d refer to the original samples.
  const SampleSet unit = normalize_samples(x);
  const AffineConstraintSet cs = compile_constraints(spec, p);
  const int l = cs.sym_len;
  const int t_col = l + n;
  const int aux_nn0 = l + n + 1;
  const int aux_psd0 = aux_nn0 + cs.aux_nonneg;
  const int nvar = cs.total_vars() + n + 1;

  std::vector<Eigen::VectorXd> g;
  g.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd ui = unit.samples.col(i);
    g.push_back(conic::svec(SymMatrix(ui * ui.transpose())));
  }

  Builder bl;
  // Zero cone: trace(C) = 1, then structure equalities.
  {
    const int row = bl.new_row(1.0);
    for (int i = 0; i < p; ++i) bl.add(row, svec_index(i, i), 1.0);
  }
  emit_structure_rows(bl, cs, aux_nn0);
  const int zero_rows = bl.rows;

  // Nonneg cone: d_i >= 0, then auxiliary nonnegatives.
  for (int i = 0; i < n; ++i) {
    const int row = bl.new_row(0.0);
    bl.add(row, l + i, -1.0);
  }
  emit_aux_nonneg_rows(bl, cs, aux_nn0);

  // PSD blocks: C - (d_i/p) u_i u_i' >= 0 per sample.
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < l; ++r) {
      const int row = bl.new_row(0.0);
      bl.add(row, r, -1.0);
      bl.add(row, l + i, g[i][r] / p);
    }
  }
  emit_aux_psd_blocks(bl, cs, aux_psd0);

  // Norm epigraph on C - (1/n) sum_i d_i u_i u_i'.
  AffineResidual v(l);
  for (int r = 0; r < l; ++r) v.add(r, r, 1.0);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < l; ++r) v.add(r, l + i, -g[i][r] / n);
  if (norm == MatrixNorm::Spectral) {
    emit_spectral_epigraph(bl, v, t_col, p);
  } else {
    emit_frobenius_epigraph(bl, v, t_col);
  }

  conic::ConicProblem prob;
  prob.c = Eigen::VectorXd::Zero(nvar);
  prob.c[t_col] = 1.0;
  bl.finish(prob, nvar);
  prob.cone.zero_dim = zero_rows;
  prob.cone.nonneg_dim = n + cs.aux_nonneg;
  for (int i = 0; i < n; ++i) prob.cone.psd_block_dims.push_back(p);
  for (int d : cs.aux_psd_dims) prob.cone.psd_block_dims.push_back(d);
  if (norm == MatrixNorm::Spectral) {
    prob.cone.psd_block_dims.push_back(p);
    prob.cone.psd_block_dims.push_back(p);
  } else {
    prob.cone.psd_block_dims.push_back(l + 1);
  }
  prob.var_map = {{"C", 0, l},
                  {"d", l, n},
                  {"t", t_col, 1},
                  {"aux_nonneg", aux_nn0, cs.aux_nonneg},
                  {"aux_psd", aux_psd0, nvar - aux_psd0}};
  return prob;
}

EstimatorResult coca(const SampleSet& x, const StructureSpec& spec,
                     MatrixNorm norm, const conic::SolveOptions& opts) {
  const int p = x.dim();
  const int n = x.count();
  const conic::ConicProblem prob = coca_problem(x, spec, norm);
  const int l = conic::svec_len(p);
  const int zero_rows = prob.cone.zero_dim;

  const conic::ConicSolution sol = conic::solve(prob, opts);
  if (sol.status == conic::SolveStatus::Infeasible)
    throw InfeasibleStructure(
        "coca: no trace-one PSD matrix satisfies the structure");
  if (sol.status == conic::SolveStatus::Unbounded)
    throw Error("coca: conic program unbounded (malformed data)");

  EstimatorResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.objective = sol.objective;

  // d_i read from the cone-exact nonneg slack (equals the d variable up to
  // the primal residual), then rescaled back to the original samples.
  res.d_values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double nrm2 = x.samples.col(i).squaredNorm();
    res.d_values[i] = sol.s[zero_rows + i] / nrm2;
  }

  const SymMatrix raw = conic::smat(sol.z.head(l));
  double pre_trace = 0.0, pre_min = 0.0;
  res.shape = polish_shape(raw, &pre_trace, &pre_min);
  res.diagnostics["pre_polish_trace"] = pre_trace;
  res.diagnostics["pre_polish_min_eig"] = pre_min;
  record_solution_diagnostics(prob, sol, opts, res.diagnostics);
  return res;
}

Eigen::VectorXd relaxation_gap(const EstimatorResult& result,
                               const SampleSet& x) {
  const int n = x.count();
  const int p = x.dim();
  if (result.d_values.size() != n)
    throw InvalidInput("relaxation_gap: result carries no d for these samples");
  if (result.shape.dim() != p)
    throw InvalidInput("relaxation_gap: dimension mismatch");
  const EigenPair ep = eig_sym(result.shape);
  const double top = ep.values.cwiseAbs().maxCoeff();
  if (ep.values.minCoeff() <= 1e-12 * top)
    throw SingularMatrix("relaxation_gap: shape is numerically singular");
  const Eigen::MatrixXd g = ep.vectors.transpose() * x.samples;
  Eigen::VectorXd out(n);
  for (int j = 0; j < n; ++j) {
    const double nrm2 = x.samples.col(j).squaredNorm();
    if (!(nrm2 > 0.0)) throw DegenerateSample("relaxation_gap: zero sample");
    double q = 0.0;
    for (int k = 0; k < p; ++k) q += g(k, j) * g(k, j) / ep.values[k];
    // Unit-sample gauge: both terms are invariant under positive rescaling
    // of x_j, so the gap is comparable across samples and its accuracy is
    // set by the solver residual, not by sample magnitudes.
    out[j] = static_cast<double>(p) * nrm2 / q - result.d_values[j] * nrm2;
  }
  return out;
}

}  // namespace covstruct
