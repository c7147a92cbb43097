#include "covstruct/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

namespace covstruct::conic {

namespace {

// svec coordinate of entry (i, j), i <= j, column-major upper triangle.
inline int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

int svec_len(int dim) {
  if (dim < 1) throw InvalidInput("svec_len: dimension must be >= 1");
  return dim * (dim + 1) / 2;
}

int svec_dim(int len) {
  if (len < 1) throw InvalidInput("svec_dim: length must be >= 1");
  const int d = static_cast<int>(std::floor((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  for (int cand = std::max(1, d - 1); cand <= d + 1; ++cand) {
    if (cand * (cand + 1) / 2 == len) return cand;
  }
  throw InvalidInput("svec_dim: length is not a triangular number");
}

Eigen::VectorXd svec(const SymMatrix& m) {
  const int p = m.dim();
  if (p < 1) throw InvalidInput("svec: empty matrix");
  Eigen::VectorXd v(svec_len(p));
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i <= j; ++i) {
      v[svec_index(i, j)] = (i == j) ? m(i, j) : kSqrt2 * m(i, j);
    }
  }
  return v;
}

SymMatrix smat(const Eigen::VectorXd& v) {
  const int p = svec_dim(static_cast<int>(v.size()));
  Eigen::MatrixXd m(p, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double x = v[svec_index(i, j)];
      if (i == j) {
        m(i, j) = x;
      } else {
        m(i, j) = kInvSqrt2 * x;
        m(j, i) = m(i, j);
      }
    }
  }
  return SymMatrix(m);
}

int ConeSpec::total_dim() const {
  int t = zero_dim + nonneg_dim;
  for (int d : psd_block_dims) t += svec_len(d);
  return t;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

void validate_cone(const ConeSpec& k) {
  if (k.zero_dim < 0 || k.nonneg_dim < 0)
    throw InvalidInput("cone: negative dimension");
  for (int d : k.psd_block_dims)
    if (d < 1) throw InvalidInput("cone: PSD block dimension must be >= 1");
}

// Reusable buffers for PSD block projections, keyed by block dimension.
struct PsdWorkspace {
  std::map<int, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> solvers;
  std::map<int, Eigen::MatrixXd> mats;
};

// Projects the svec slice v[base .. base+svec_len(d)) onto the PSD cone.
void project_psd_block(Eigen::VectorXd& v, int base, int d, PsdWorkspace& ws) {
  Eigen::MatrixXd& m = ws.mats.try_emplace(d, Eigen::MatrixXd(d, d)).first->second;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double x = v[base + svec_index(i, j)];
      if (i == j) {
        m(i, j) = x;
      } else {
        m(i, j) = kInvSqrt2 * x;
        m(j, i) = m(i, j);
      }
    }
  }
  auto& es = ws.solvers.try_emplace(d).first->second;
  es.compute(m);
  if (es.info() != Eigen::Success)
    throw Error("project_cone: eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd& vec = es.eigenvectors();
  m.setZero();
  for (int k = 0; k < d; ++k) {
    if (lam[k] > 0.0)
      m.selfadjointView<Eigen::Lower>().rankUpdate(vec.col(k), lam[k]);
  }
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i <= j; ++i) {
      v[base + svec_index(i, j)] = (i == j) ? m(j, i) : kSqrt2 * m(j, i);
    }
  }
}

// Projects v[base .. base+total_dim) onto K (dual=false) or K* (dual=true).
// Zero cone: pinned at 0 primally, free in the dual. Nonneg and PSD parts
// are self-dual.
void project_cone_inplace(Eigen::VectorXd& v, const ConeSpec& k, int base,
                          bool dual, PsdWorkspace& ws) {
  int off = base;
  if (k.zero_dim > 0) {
    if (!dual) v.segment(off, k.zero_dim).setZero();
    off += k.zero_dim;
  }
  if (k.nonneg_dim > 0) {
    v.segment(off, k.nonneg_dim) = v.segment(off, k.nonneg_dim).cwiseMax(0.0);
    off += k.nonneg_dim;
  }
  for (int d : k.psd_block_dims) {
    project_psd_block(v, off, d, ws);
    off += svec_len(d);
  }
}

}  // namespace

Eigen::VectorXd project_cone(const Eigen::VectorXd& s, const ConeSpec& k) {
  validate_cone(k);
  if (s.size() != k.total_dim())
    throw InvalidInput("project_cone: length does not match cone");
  Eigen::VectorXd out = s;
  PsdWorkspace ws;
  project_cone_inplace(out, k, 0, /*dual=*/false, ws);
  return out;
}

Eigen::VectorXd project_dual_cone(const Eigen::VectorXd& y, const ConeSpec& k) {
  validate_cone(k);
  if (y.size() != k.total_dim())
    throw InvalidInput("project_dual_cone: length does not match cone");
  Eigen::VectorXd out = y;
  PsdWorkspace ws;
  project_cone_inplace(out, k, 0, /*dual=*/true, ws);
  return out;
}

namespace {

struct Equilibration {
  Eigen::VectorXd row;  // D, applied to rows of A and to b
  Eigen::VectorXd col;  // E, applied to cols of A and to c
};

// Ruiz equilibration. Rows belonging to one PSD block share a single factor
// so the scaled cone is still the PSD cone; zero/nonneg rows scale freely.
Equilibration equilibrate(Eigen::SparseMatrix<double>& a, const ConeSpec& cone,
                          double extra_row_scale, int passes = 15) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());

  std::vector<int> group(m);
  int g = 0, off = 0;
  for (int i = 0; i < cone.zero_dim + cone.nonneg_dim; ++i) group[off++] = g++;
  for (int d : cone.psd_block_dims) {
    const int len = svec_len(d);
    for (int i = 0; i < len; ++i) group[off++] = g;
    ++g;
  }
  const int ngroups = g;

  Equilibration eq;
  eq.row = Eigen::VectorXd::Ones(m);
  eq.col = Eigen::VectorXd::Ones(n);

  Eigen::VectorXd gmax(ngroups), cmax(n), rfac(m), cfac(n);
  for (int pass = 0; pass < passes; ++pass) {
    gmax.setZero();
    cmax.setZero();
    for (int j = 0; j < n; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it) {
        const double v = std::abs(it.value());
        auto& gm = gmax[group[it.row()]];
        if (v > gm) gm = v;
        if (v > cmax[j]) cmax[j] = v;
      }
    }
    for (int i = 0; i < m; ++i) {
      const double v = gmax[group[i]];
      rfac[i] = (v > 1e-12) ? 1.0 / std::sqrt(v) : 1.0;
    }
    for (int j = 0; j < n; ++j)
      cfac[j] = (cmax[j] > 1e-12) ? 1.0 / std::sqrt(cmax[j]) : 1.0;
    for (int j = 0; j < n; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
        it.valueRef() *= rfac[it.row()] * cfac[j];
    }
    eq.row.array() *= rfac.array();
    eq.col.array() *= cfac.array();
  }

  if (extra_row_scale != 1.0) {
    a *= extra_row_scale;
    eq.row *= extra_row_scale;
  }
  return eq;
}

struct Candidate {
  Eigen::VectorXd x, y, s;
  double pres = 0, dres = 0, gap = 0;
  double tol_p = 1, tol_d = 1, tol_g = 1;
  double objective = 0;
  bool valid = false;

  double score() const { return pres / tol_p + dres / tol_d + gap / tol_g; }
};

}  // namespace

ConicSolution solve(const ConicProblem& prob, const SolveOptions& opts) {
  validate_cone(prob.cone);
  const int n = static_cast<int>(prob.c.size());
  const int m = static_cast<int>(prob.A.rows());
  if (n < 1) throw InvalidInput("solve: problem has no variables");
  if (m < 1) throw InvalidInput("solve: problem has no constraints");
  if (prob.A.cols() != n) throw InvalidInput("solve: A column count != |c|");
  if (prob.b.size() != m) throw InvalidInput("solve: |b| != A row count");
  if (m != prob.cone.total_dim())
    throw InvalidInput("solve: cone dimension != A row count");
  if (!prob.b.allFinite() || !prob.c.allFinite())
    throw InvalidInput("solve: non-finite b or c");
  for (int j = 0; j < prob.A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(prob.A, j); it; ++it)
      if (!std::isfinite(it.value())) throw InvalidInput("solve: non-finite A");
  if (!(opts.eps_abs > 0) || !(opts.eps_rel >= 0) || opts.max_iters < 1 ||
      !(opts.scale > 0))
    throw InvalidInput("solve: bad options");

  // Scaled working copy of the data; every termination test below is
  // evaluated on the original (prob.A, prob.b, prob.c).
  Eigen::SparseMatrix<double> as = prob.A;
  const Equilibration eq = equilibrate(as, prob.cone, opts.scale);
  const Eigen::SparseMatrix<double> ast = as.transpose();
  const Eigen::VectorXd bs = eq.row.cwiseProduct(prob.b);
  const Eigen::VectorXd cs = eq.col.cwiseProduct(prob.c);

  // Cached Cholesky of I + As'As; the affine step reduces to it via one
  // Sherman-Morrison correction for the rank-one tau coupling.
  Eigen::MatrixXd ata = Eigen::MatrixXd(ast * as);
  ata.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(ata);
  if (llt.info() != Eigen::Success)
    throw Error("solve: factorization of I + A'A failed");

  Eigen::VectorXd mx(n);
  const auto m_solve = [&](const Eigen::VectorXd& rx, const Eigen::VectorXd& ry,
                           Eigen::VectorXd& ox, Eigen::VectorXd& oy) {
    // [I A'; -A I] [ox; oy] = [rx; ry]
    mx.noalias() = ast * ry;
    mx = rx - mx;
    ox = llt.solve(mx);
    oy.noalias() = as * ox;
    oy += ry;
  };

  Eigen::VectorXd gx(n), gy(m);
  m_solve(cs, bs, gx, gy);
  const double den = 1.0 + cs.dot(gx) + bs.dot(gy);

  const int nn = n + m + 1;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nn);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(nn);
  u[nn - 1] = 1.0;
  v[nn - 1] = 1.0;

  Eigen::VectorXd t(nn), rx(n), ry(m), px(n), py(m);
  PsdWorkspace ws;

  const double norm_b = prob.b.norm();
  const double norm_c = prob.c.norm();
  constexpr double kAlpha = 1.5;  // over-relaxation
  constexpr int kCheckEvery = 25;

  Candidate best;
  Eigen::VectorXd xc(n), yc(m), sc(m), ax(m), aty(n);

  const auto extract_and_check = [&](ConicSolution* done) -> bool {
    const double tau = u[nn - 1];
    if (tau > 1e-12) {
      xc = eq.col.cwiseProduct(u.head(n)) / tau;
      yc = eq.row.cwiseProduct(u.segment(n, m)) / tau;
      sc = v.segment(n, m).cwiseQuotient(eq.row) / tau;
      project_cone_inplace(sc, prob.cone, 0, /*dual=*/false, ws);
      ax.noalias() = prob.A * xc;
      aty.noalias() = prob.A.transpose() * yc;
      const double ctx = prob.c.dot(xc);
      const double bty = prob.b.dot(yc);
      Candidate cand;
      cand.pres = (ax + sc - prob.b).norm();
      cand.dres = (aty + prob.c).norm();
      cand.gap = std::abs(ctx + bty);
      cand.tol_p = opts.eps_abs +
                   opts.eps_rel * std::max({ax.norm(), sc.norm(), norm_b});
      cand.tol_d = opts.eps_abs + opts.eps_rel * std::max(aty.norm(), norm_c);
      cand.tol_g =
          opts.eps_abs + opts.eps_rel * std::max(std::abs(ctx), std::abs(bty));
      cand.objective = ctx;
      cand.valid = true;
      if (!best.valid || cand.score() < best.score()) {
        best = cand;
        best.x = xc;
        best.y = yc;
        best.s = sc;
      }
      if (cand.pres <= cand.tol_p && cand.dres <= cand.tol_d &&
          cand.gap <= cand.tol_g) {
        done->z = xc;
        done->y = yc;
        done->s = sc;
        done->status = SolveStatus::Optimal;
        done->objective = ctx;
        done->primal_res = cand.pres;
        done->dual_res = cand.dres;
        done->gap = cand.gap;
        return true;
      }
    }
    // Infeasibility certificate from the dual ray (homogeneous in u_y).
    yc = eq.row.cwiseProduct(u.segment(n, m));
    const double bty = prob.b.dot(yc);
    if (bty < -1e-12) {
      aty.noalias() = prob.A.transpose() * yc;
      if (aty.norm() * norm_b <= opts.eps_abs * (-bty)) {
        done->z = Eigen::VectorXd::Zero(n);
        done->s = Eigen::VectorXd::Zero(m);
        done->y = yc / (-bty);
        done->status = SolveStatus::Infeasible;
        done->objective = std::numeric_limits<double>::quiet_NaN();
        done->dual_res = aty.norm() / (-bty);
        return true;
      }
    }
    // Unboundedness certificate from the primal ray.
    xc = eq.col.cwiseProduct(u.head(n));
    const double ctx = prob.c.dot(xc);
    if (ctx < -1e-12) {
      sc = v.segment(n, m).cwiseQuotient(eq.row);
      project_cone_inplace(sc, prob.cone, 0, /*dual=*/false, ws);
      ax.noalias() = prob.A * xc;
      if ((ax + sc).norm() * norm_c <= opts.eps_abs * (-ctx)) {
        done->z = xc / (-ctx);
        done->s = sc / (-ctx);
        done->y = Eigen::VectorXd::Zero(m);
        done->status = SolveStatus::Unbounded;
        done->objective = std::numeric_limits<double>::quiet_NaN();
        done->primal_res = (ax + sc).norm() / (-ctx);
        return true;
      }
    }
    return false;
  };

  ConicSolution sol;
  for (int it = 1; it <= opts.max_iters; ++it) {
    // Affine step: ut = (I + Q)^{-1} (u + v).
    t = u + v;  // reuse t as the rhs buffer
    const double wtau = t[nn - 1];
    rx = t.head(n) - cs * wtau;
    ry = t.segment(n, m) - bs * wtau;
    m_solve(rx, ry, px, py);
    const double hp = (cs.dot(px) + bs.dot(py)) / den;
    px -= gx * hp;
    py -= gy * hp;
    const double uttau = wtau + cs.dot(px) + bs.dot(py);

    // Over-relaxation: t = alpha*ut + (1-alpha)*u.
    t.head(n) = kAlpha * px + (1.0 - kAlpha) * u.head(n);
    t.segment(n, m) = kAlpha * py + (1.0 - kAlpha) * u.segment(n, m);
    t[nn - 1] = kAlpha * uttau + (1.0 - kAlpha) * u[nn - 1];

    // Cone step: u = Proj_C(t - v), C = R^n x K* x R+.
    u = t - v;
    project_cone_inplace(u, prob.cone, n, /*dual=*/true, ws);
    u[nn - 1] = std::max(u[nn - 1], 0.0);

    // Dual update: v = v - t + u.
    v += u - t;

    if (it % kCheckEvery == 0 || it == opts.max_iters) {
      if (extract_and_check(&sol)) {
        sol.iterations = it;
        return sol;
      }
    }
  }

  // Out of iterations: report the best candidate seen, honestly labeled.
  sol.status = SolveStatus::MaxIters;
  sol.iterations = opts.max_iters;
  if (best.valid) {
    sol.z = best.x;
    sol.y = best.y;
    sol.s = best.s;
    sol.objective = best.objective;
    sol.primal_res = best.pres;
    sol.dual_res = best.dres;
    sol.gap = best.gap;
  } else {
    sol.z = Eigen::VectorXd::Zero(n);
    sol.y = Eigen::VectorXd::Zero(m);
    sol.s = Eigen::VectorXd::Zero(m);
    sol.primal_res = std::numeric_limits<double>::infinity();
    sol.dual_res = std::numeric_limits<double>::infinity();
    sol.gap = std::numeric_limits<double>::infinity();
  }
  return sol;
}

KktResiduals kkt_residuals(const ConicProblem& prob, const ConicSolution& sol) {
  if (sol.z.size() != prob.c.size() || sol.s.size() != prob.A.rows() ||
      sol.y.size() != prob.A.rows())
    throw InvalidInput("kkt_residuals: solution/problem size mismatch");
  KktResiduals r;
  r.primal = (prob.A * sol.z + sol.s - prob.b).norm();
  r.dual = (prob.A.transpose() * sol.y + prob.c).norm();
  r.gap = std::abs(prob.c.dot(sol.z) + prob.b.dot(sol.y));
  return r;
}

namespace {

void put_value(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

void dump_problem(const ConicProblem& prob, std::ostream& os) {
  const int n = static_cast<int>(prob.c.size());
  const int m = static_cast<int>(prob.A.rows());
  os << "conic-problem v1\n";
  os << "vars " << n << "\n";
  os << "rows " << m << "\n";
  os << "cone zero " << prob.cone.zero_dim << " nonneg " << prob.cone.nonneg_dim
     << " psd " << prob.cone.psd_block_dims.size();
  for (int d : prob.cone.psd_block_dims) os << " " << d;
  os << "\n";
  os << "slices " << prob.var_map.size() << "\n";
  for (const auto& sl : prob.var_map)
    os << "slice " << sl.name << " " << sl.offset << " " << sl.len << "\n";
  os << "c " << n << "\n";
  for (int i = 0; i < n; ++i) {
    put_value(os, prob.c[i]);
    os << "\n";
  }
  os << "b " << m << "\n";
  for (int i = 0; i < m; ++i) {
    put_value(os, prob.b[i]);
    os << "\n";
  }
  os << "A " << prob.A.nonZeros() << "\n";
  for (int j = 0; j < prob.A.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(prob.A, j); it; ++it) {
      os << it.row() << " " << it.col() << " ";
      put_value(os, it.value());
      os << "\n";
    }
  }
  os << "end\n";
}

}  // namespace covstruct::conic
