#include "covstruct/structures.hpp"

#include <cmath>
#include <vector>

#include "covstruct/conic.hpp"

namespace covstruct {

namespace {

inline int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

constexpr double kSqrt2 = 1.4142135623730950488;

void validate_spec(const StructureSpec& spec, int p) {
  if (p < 1) throw InvalidSpec("structure: dimension must be >= 1");
  switch (spec.kind) {
    case StructureSpec::Kind::Unconstrained:
    case StructureSpec::Kind::Toeplitz:
      return;
    case StructureSpec::Kind::Banded:
      if (spec.bandwidth < 0 || spec.bandwidth > p - 1)
        throw InvalidSpec("structure: bandwidth must lie in [0, p-1]");
      return;
    case StructureSpec::Kind::LowRankPlusNoise:
      if (!(spec.sigma2 >= 0.0) || !std::isfinite(spec.sigma2))
        throw InvalidSpec("structure: sigma2 must be >= 0");
      if (!(spec.beta > 0.0) || !std::isfinite(spec.beta))
        throw InvalidSpec("structure: beta must be > 0");
      return;
    case StructureSpec::Kind::LinearParam: {
      if (!(spec.beta > 0.0) || !std::isfinite(spec.beta))
        throw InvalidSpec("structure: beta must be > 0");
      if (spec.atoms.empty())
        throw InvalidSpec("structure: LinearParam needs at least one atom");
      for (const auto& a : spec.atoms) {
        if (a.size() != p) throw InvalidSpec("structure: atom dimension != p");
        if (!a.allFinite() || a.norm() == 0.0)
          throw InvalidSpec("structure: atoms must be nonzero and finite");
      }
      return;
    }
  }
  throw InvalidSpec("structure: unknown kind");
}

}  // namespace

StructureSpec StructureSpec::unconstrained() {
  StructureSpec s;
  s.kind = Kind::Unconstrained;
  return s;
}

StructureSpec StructureSpec::toeplitz() {
  StructureSpec s;
  s.kind = Kind::Toeplitz;
  return s;
}

StructureSpec StructureSpec::banded(int k) {
  StructureSpec s;
  s.kind = Kind::Banded;
  s.bandwidth = k;
  return s;
}

StructureSpec StructureSpec::low_rank_plus_noise(double sigma2, double beta) {
  StructureSpec s;
  s.kind = Kind::LowRankPlusNoise;
  s.sigma2 = sigma2;
  s.beta = beta;
  return s;
}

StructureSpec StructureSpec::linear_param(std::vector<Eigen::VectorXd> atoms,
                                          double beta) {
  StructureSpec s;
  s.kind = Kind::LinearParam;
  s.atoms = std::move(atoms);
  s.beta = beta;
  return s;
}

int AffineConstraintSet::total_vars() const {
  int t = sym_len + aux_nonneg;
  for (int d : aux_psd_dims) t += conic::svec_len(d);
  return t;
}

AffineConstraintSet compile_constraints(const StructureSpec& spec, int p) {
  validate_spec(spec, p);
  AffineConstraintSet out;
  out.dim = p;
  out.sym_len = conic::svec_len(p);

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> rhs;
  int rows = 0;

  switch (spec.kind) {
    case StructureSpec::Kind::Unconstrained:
      break;

    case StructureSpec::Kind::Toeplitz:
      // Equal entries along each diagonal: C(i, i+k) = C(i+1, i+1+k).
      // svec scaling is uniform within a diagonal, so the scaled coordinates
      // may be equated directly.
      for (int k = 0; k < p; ++k) {
        for (int i = 0; i + 1 + k <= p - 1; ++i) {
          trip.emplace_back(rows, svec_index(i, i + k), 1.0);
          trip.emplace_back(rows, svec_index(i + 1, i + 1 + k), -1.0);
          rhs.push_back(0.0);
          ++rows;
        }
      }
      break;

    case StructureSpec::Kind::Banded:
      for (int j = 0; j < p; ++j) {
        for (int i = 0; i < j; ++i) {
          if (j - i > spec.bandwidth) {
            trip.emplace_back(rows, svec_index(i, j), 1.0);
            rhs.push_back(0.0);
            ++rows;
          }
        }
      }
      break;

    case StructureSpec::Kind::LowRankPlusNoise: {
      // C = X + sigma2*I with X PSD (aux block), trace(X) <= beta (slack).
      out.aux_psd_dims.push_back(p);
      out.aux_nonneg = 1;
      const int slack_col = out.sym_len;
      const int x_col = out.sym_len + 1;
      for (int j = 0; j < p; ++j) {
        for (int i = 0; i <= j; ++i) {
          const int k = svec_index(i, j);
          trip.emplace_back(rows, k, 1.0);
          trip.emplace_back(rows, x_col + k, -1.0);
          rhs.push_back(i == j ? spec.sigma2 : 0.0);
          ++rows;
        }
      }
      for (int i = 0; i < p; ++i)
        trip.emplace_back(rows, x_col + svec_index(i, i), 1.0);
      trip.emplace_back(rows, slack_col, 1.0);
      rhs.push_back(spec.beta);
      ++rows;
      break;
    }

    case StructureSpec::Kind::LinearParam: {
      // C = sum_i p_i a_i a_i^T with p_i >= 0, sum p_i + slack = beta.
      const int k = static_cast<int>(spec.atoms.size());
      out.aux_nonneg = k + 1;  // coefficients then slack
      const int coeff_col = out.sym_len;
      std::vector<Eigen::VectorXd> gs;
      gs.reserve(k);
      for (const auto& a : spec.atoms)
        gs.push_back(conic::svec(SymMatrix(a * a.transpose())));
      for (int r = 0; r < out.sym_len; ++r) {
        trip.emplace_back(rows, r, 1.0);
        for (int i = 0; i < k; ++i) {
          if (gs[i][r] != 0.0)
            trip.emplace_back(rows, coeff_col + i, -gs[i][r]);
        }
        rhs.push_back(0.0);
        ++rows;
      }
      for (int i = 0; i < k; ++i) trip.emplace_back(rows, coeff_col + i, 1.0);
      trip.emplace_back(rows, coeff_col + k, 1.0);  // slack
      rhs.push_back(spec.beta);
      ++rows;
      break;
    }
  }

  out.eq.resize(rows, out.total_vars());
  out.eq.setFromTriplets(trip.begin(), trip.end());
  out.rhs = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
  return out;
}

namespace {

// LinearParam membership via a small LP: minimize the max svec-coordinate
// residual t over nonneg coefficients with sum <= beta.
bool linear_param_contains(const StructureSpec& spec, const SymMatrix& m,
                           double tol) {
  const int p = m.dim();
  const int k = static_cast<int>(spec.atoms.size());
  const int sl = conic::svec_len(p);
  const Eigen::VectorXd mv = conic::svec(m);
  std::vector<Eigen::VectorXd> gs;
  gs.reserve(k);
  for (const auto& a : spec.atoms)
    gs.push_back(conic::svec(SymMatrix(a * a.transpose())));

  // Variables: (p_1..p_k, t). Rows, all nonneg slacks:
  //   t - (sum p_i g_i - m)_r >= 0,  t + (sum p_i g_i - m)_r >= 0,
  //   beta - sum p_i >= 0,  p_i >= 0,  t >= 0.
  conic::ConicProblem prob;
  const int nvar = k + 1;
  prob.c = Eigen::VectorXd::Zero(nvar);
  prob.c[k] = 1.0;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> rhs;
  int rows = 0;
  for (int r = 0; r < sl; ++r) {
    for (int i = 0; i < k; ++i)
      if (gs[i][r] != 0.0) trip.emplace_back(rows, i, gs[i][r]);
    trip.emplace_back(rows, k, -1.0);
    rhs.push_back(mv[r]);
    ++rows;
    for (int i = 0; i < k; ++i)
      if (gs[i][r] != 0.0) trip.emplace_back(rows, i, -gs[i][r]);
    trip.emplace_back(rows, k, -1.0);
    rhs.push_back(-mv[r]);
    ++rows;
  }
  for (int i = 0; i < k; ++i) trip.emplace_back(rows, i, 1.0);
  rhs.push_back(spec.beta);
  ++rows;
  for (int i = 0; i <= k; ++i) {
    trip.emplace_back(rows, i, -1.0);
    rhs.push_back(0.0);
    ++rows;
  }
  prob.A.resize(rows, nvar);
  prob.A.setFromTriplets(trip.begin(), trip.end());
  prob.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
  prob.cone.nonneg_dim = rows;

  conic::SolveOptions opts;
  opts.eps_abs = 1e-9;
  opts.eps_rel = 1e-9;
  const conic::ConicSolution sol = conic::solve(prob, opts);
  if (sol.status != conic::SolveStatus::Optimal) return false;
  return sol.objective <= tol + 1e-7;
}

}  // namespace

bool contains(const StructureSpec& spec, const SymMatrix& m, double tol) {
  validate_spec(spec, m.dim());
  if (!(tol >= 0.0)) throw InvalidInput("contains: tol must be >= 0");
  switch (spec.kind) {
    case StructureSpec::Kind::Unconstrained:
      return true;
    case StructureSpec::Kind::Toeplitz:
    case StructureSpec::Kind::Banded: {
      const AffineConstraintSet cs = compile_constraints(spec, m.dim());
      if (cs.eq.rows() == 0) return true;
      const Eigen::VectorXd res = cs.eq * conic::svec(m) - cs.rhs;
      return res.cwiseAbs().maxCoeff() <= tol;
    }
    case StructureSpec::Kind::LowRankPlusNoise: {
      // X = M - sigma2*I is uniquely determined; closed-form check.
      SymMatrix x(m.mat() - spec.sigma2 * Eigen::MatrixXd::Identity(m.dim(), m.dim()));
      const EigenPair ep = eig_sym(x);
      return ep.values.minCoeff() >= -tol && x.trace() <= spec.beta + tol;
    }
    case StructureSpec::Kind::LinearParam:
      return linear_param_contains(spec, m, tol);
  }
  throw InvalidSpec("contains: unknown kind");
}

SymMatrix project_frobenius(const StructureSpec& spec, const SymMatrix& m) {
  const int p = m.dim();
  validate_spec(spec, p);
  switch (spec.kind) {
    case StructureSpec::Kind::Unconstrained:
      return m;
    case StructureSpec::Kind::Toeplitz: {
      Eigen::MatrixXd out(p, p);
      for (int k = 0; k < p; ++k) {
        double s = 0.0;
        for (int i = 0; i + k < p; ++i) s += m(i, i + k);
        const double avg = s / (p - k);
        for (int i = 0; i + k < p; ++i) {
          out(i, i + k) = avg;
          out(i + k, i) = avg;
        }
      }
      return SymMatrix(out);
    }
    case StructureSpec::Kind::Banded: {
      Eigen::MatrixXd out = m.mat();
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < p; ++i)
          if (std::abs(i - j) > spec.bandwidth) out(i, j) = 0.0;
      return SymMatrix(out);
    }
    case StructureSpec::Kind::LowRankPlusNoise:
    case StructureSpec::Kind::LinearParam:
      throw UnsupportedSpec(
          "project_frobenius: closed form defined only for Toeplitz/Banded");
  }
  throw InvalidSpec("project_frobenius: unknown kind");
}

SymMatrix make_toeplitz_target(int p, double rho) {
  if (p < 1) throw InvalidSpec("make_toeplitz_target: p must be >= 1");
  if (!(rho > 0.0 && rho < 1.0))
    throw InvalidSpec("make_toeplitz_target: rho must lie in (0, 1)");
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = std::pow(rho, std::abs(i - j));
  return SymMatrix(m);
}

BandedTarget make_banded_target(int p) {
  if (p < 1) throw InvalidSpec("make_banded_target: p must be >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) m(i, i) = 21.0 + i;
  for (int i = 0; i + 1 < p; ++i) {
    m(i, i + 1) = 1.0 + i;
    m(i + 1, i) = 1.0 + i;
  }
  for (int i = 0; i + 2 < p; ++i) {
    m(i, i + 2) = 1.0 + i;
    m(i + 2, i) = 1.0 + i;
  }
  BandedTarget out;
  SymMatrix raw(m);
  const EigenPair ep = eig_sym(raw);
  out.min_eigenvalue = ep.values.minCoeff();
  const double top = ep.values.cwiseAbs().maxCoeff();
  if (out.min_eigenvalue < 1e-8 * top) {
    out.shift = std::max(0.0, 1e-3 - out.min_eigenvalue);
    m.diagonal().array() += out.shift;
  }
  out.matrix = SymMatrix(m);
  return out;
}

}  // namespace covstruct
