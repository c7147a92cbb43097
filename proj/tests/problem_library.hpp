#pragma once

// Small conic programs with hand-derived optima, shared by the unit tests
// and the acceptance suite. Every optimal objective below is analytic:
// LPs by inspection, minimum-eigenvalue SDPs by diagonalization, epigraph
// problems by the norm they encode.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covstruct/conic.hpp"
#include "covstruct/sym_matrix.hpp"

namespace covstruct::testlib {

struct OracleProblem {
  std::string name;
  conic::ConicProblem prob;
  conic::SolveStatus expected = conic::SolveStatus::Optimal;
  double objective = 0.0;  // meaningful when expected == Optimal
  // Unique optimizers only; checked against sol.z when present.
  std::optional<Eigen::VectorXd> z_expected;
};

namespace detail {

class ProblemBuilder {
 public:
  explicit ProblemBuilder(int nvar) : nvar_(nvar), c_(Eigen::VectorXd::Zero(nvar)) {}

  void cost(int col, double v) { c_[col] = v; }

  int row(double rhs) {
    b_.push_back(rhs);
    return static_cast<int>(b_.size()) - 1;
  }

  void entry(int r, int col, double v) {
    if (v != 0.0) trip_.emplace_back(r, col, v);
  }

  // Appends the svec rows of an affine PSD slack block
  // smat(P z + q) >= 0, one row per svec coordinate.
  void psd_block(const std::vector<std::vector<std::pair<int, double>>>& p,
                 const Eigen::VectorXd& q) {
    for (int r = 0; r < q.size(); ++r) {
      const int rr = row(q[r]);
      for (const auto& [col, v] : p[r]) entry(rr, col, -v);
    }
  }

  conic::ConicProblem finish(int zero, int nonneg, std::vector<int> psd) {
    conic::ConicProblem prob;
    prob.c = c_;
    prob.b = Eigen::Map<const Eigen::VectorXd>(b_.data(), b_.size());
    prob.A.resize(static_cast<int>(b_.size()), nvar_);
    prob.A.setFromTriplets(trip_.begin(), trip_.end());
    prob.cone.zero_dim = zero;
    prob.cone.nonneg_dim = nonneg;
    prob.cone.psd_block_dims = std::move(psd);
    return prob;
  }

 private:
  int nvar_;
  Eigen::VectorXd c_;
  std::vector<double> b_;
  std::vector<Eigen::Triplet<double>> trip_;
};

// Rows that pin svec(X) (variables at column offset x0, length l) to a PSD
// block: s = x, i.e. -x + s = 0.
inline void self_psd_rows(ProblemBuilder& bl, int x0, int l) {
  for (int r = 0; r < l; ++r) {
    const int rr = bl.row(0.0);
    bl.entry(rr, x0 + r, -1.0);
  }
}

// Arrow-form Frobenius epigraph rows: the (l+1)-dimensional block
// [[t, v'], [v, t I]] with v = (affine map of z held in p, q). PSD of the
// arrow matrix is equivalent to t >= ||v||_2.
inline void arrow_rows(ProblemBuilder& bl, int t_col,
                       const std::vector<std::vector<std::pair<int, double>>>& p,
                       const Eigen::VectorXd& q) {
  const int l = static_cast<int>(q.size());
  const double s2 = std::sqrt(2.0);
  for (int j = 0; j < l + 1; ++j) {
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        const int rr = bl.row(0.0);
        bl.entry(rr, t_col, -1.0);
      } else if (i == 0) {
        const int rr = bl.row(s2 * q[j - 1]);
        for (const auto& [col, v] : p[j - 1]) bl.entry(rr, col, -s2 * v);
      } else {
        bl.row(0.0);
      }
    }
  }
}

}  // namespace detail

inline std::vector<OracleProblem> oracle_problems() {
  using detail::ProblemBuilder;
  const double s2 = std::sqrt(2.0);
  std::vector<OracleProblem> out;

  {  // min x : x >= 1
    ProblemBuilder bl(1);
    bl.cost(0, 1.0);
    const int r = bl.row(-1.0);
    bl.entry(r, 0, -1.0);
    OracleProblem p{"lp_scalar_bound", bl.finish(0, 1, {}), conic::SolveStatus::Optimal, 1.0,
                    Eigen::VectorXd::Constant(1, 1.0)};
    out.push_back(std::move(p));
  }
  {  // min x + y : x >= 1, y >= 2
    ProblemBuilder bl(2);
    bl.cost(0, 1.0);
    bl.cost(1, 1.0);
    int r = bl.row(-1.0);
    bl.entry(r, 0, -1.0);
    r = bl.row(-2.0);
    bl.entry(r, 1, -1.0);
    Eigen::VectorXd z(2);
    z << 1.0, 2.0;
    out.push_back({"lp_two_bounds", bl.finish(0, 2, {}), conic::SolveStatus::Optimal, 3.0, z});
  }
  {  // min x + 2y : x + y = 1, x >= 0, y >= 0
    ProblemBuilder bl(2);
    bl.cost(0, 1.0);
    bl.cost(1, 2.0);
    int r = bl.row(1.0);
    bl.entry(r, 0, 1.0);
    bl.entry(r, 1, 1.0);
    r = bl.row(0.0);
    bl.entry(r, 0, -1.0);
    r = bl.row(0.0);
    bl.entry(r, 1, -1.0);
    Eigen::VectorXd z(2);
    z << 1.0, 0.0;
    out.push_back({"lp_equality", bl.finish(1, 2, {}), conic::SolveStatus::Optimal, 1.0, z});
  }
  {  // min -x : x <= 2
    ProblemBuilder bl(1);
    bl.cost(0, -1.0);
    const int r = bl.row(2.0);
    bl.entry(r, 0, 1.0);
    out.push_back({"lp_negative", bl.finish(0, 1, {}), conic::SolveStatus::Optimal, -2.0,
                   Eigen::VectorXd::Constant(1, 2.0)});
  }
  {  // min x - y : 0 <= x <= 1, 0 <= y <= 1
    ProblemBuilder bl(2);
    bl.cost(0, 1.0);
    bl.cost(1, -1.0);
    int r = bl.row(0.0);
    bl.entry(r, 0, -1.0);
    r = bl.row(1.0);
    bl.entry(r, 0, 1.0);
    r = bl.row(0.0);
    bl.entry(r, 1, -1.0);
    r = bl.row(1.0);
    bl.entry(r, 1, 1.0);
    Eigen::VectorXd z(2);
    z << 0.0, 1.0;
    out.push_back({"lp_box", bl.finish(0, 4, {}), conic::SolveStatus::Optimal, -1.0, z});
  }
  {  // min <diag(1,2), X> : tr X = 1, X >= 0  ->  lambda_min = 1, X = diag(1,0)
    ProblemBuilder bl(3);
    bl.cost(0, 1.0);
    bl.cost(2, 2.0);
    const int r = bl.row(1.0);
    bl.entry(r, 0, 1.0);
    bl.entry(r, 2, 1.0);
    detail::self_psd_rows(bl, 0, 3);
    Eigen::VectorXd z(3);
    z << 1.0, 0.0, 0.0;
    out.push_back({"sdp_min_eig_diag", bl.finish(1, 0, {2}), conic::SolveStatus::Optimal, 1.0, z});
  }
  {  // min <T, X> : tr X = 1, X >= 0 with T = tridiag(-1, 2, -1), p = 3
     // lambda_min(T) = 2 - sqrt(2)
    ProblemBuilder bl(6);
    bl.cost(0, 2.0);
    bl.cost(1, -s2);
    bl.cost(2, 2.0);
    bl.cost(4, -s2);
    bl.cost(5, 2.0);
    const int r = bl.row(1.0);
    bl.entry(r, 0, 1.0);
    bl.entry(r, 2, 1.0);
    bl.entry(r, 5, 1.0);
    detail::self_psd_rows(bl, 0, 6);
    out.push_back({"sdp_min_eig_tridiag", bl.finish(1, 0, {3}), conic::SolveStatus::Optimal,
                   2.0 - std::sqrt(2.0), std::nullopt});
  }
  {  // max <M, X> : tr X = 1, X >= 0 with M = [[1,2],[2,1]]; stated as
     // min <-M, X>, optimum -lambda_max(M) = -3
    ProblemBuilder bl(3);
    bl.cost(0, -1.0);
    bl.cost(1, -2.0 * s2);
    bl.cost(2, -1.0);
    const int r = bl.row(1.0);
    bl.entry(r, 0, 1.0);
    bl.entry(r, 2, 1.0);
    detail::self_psd_rows(bl, 0, 3);
    Eigen::VectorXd z(3);  // X = vv' with v = (1,1)/sqrt(2)
    z << 0.5, 0.5 * s2, 0.5;
    out.push_back({"sdp_lambda_max", bl.finish(1, 0, {2}), conic::SolveStatus::Optimal, -3.0, z});
  }
  {  // min t : -tI <= diag(3,-4) <= tI  ->  t = 4
    ProblemBuilder bl(1);
    bl.cost(0, 1.0);
    const Eigen::Vector2d d(3.0, -4.0);
    for (int sg : {+1, -1}) {
      // block svec(t I - sg * diag(d)) as b - A z
      int r = bl.row(-sg * d[0]);
      bl.entry(r, 0, -1.0);
      bl.row(0.0);
      r = bl.row(-sg * d[1]);
      bl.entry(r, 0, -1.0);
    }
    out.push_back({"spec_epigraph_diag", bl.finish(0, 0, {2, 2}), conic::SolveStatus::Optimal, 4.0,
                   Eigen::VectorXd::Constant(1, 4.0)});
  }
  {  // min t : -tI <= M <= tI with M = [[0,5],[5,0]]  ->  t = 5
    ProblemBuilder bl(1);
    bl.cost(0, 1.0);
    for (int sg : {+1, -1}) {
      int r = bl.row(0.0);
      bl.entry(r, 0, -1.0);
      bl.row(-sg * 5.0 * s2);
      r = bl.row(0.0);
      bl.entry(r, 0, -1.0);
    }
    out.push_back({"spec_epigraph_offdiag", bl.finish(0, 0, {2, 2}), conic::SolveStatus::Optimal,
                   5.0, Eigen::VectorXd::Constant(1, 5.0)});
  }
  {  // min t : ||M||_F <= t with fixed M = [[1,2],[2,1]]  ->  t = sqrt(10)
    ProblemBuilder bl(1);
    bl.cost(0, 1.0);
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 2, 1;
    const Eigen::VectorXd v = conic::svec(SymMatrix(m));
    const std::vector<std::vector<std::pair<int, double>>> p(v.size());
    detail::arrow_rows(bl, 0, p, v);
    out.push_back({"fro_epigraph_const", bl.finish(0, 0, {4}), conic::SolveStatus::Optimal,
                   std::sqrt(10.0), Eigen::VectorXd::Constant(1, std::sqrt(10.0))});
  }
  {  // min t : X >= 0, ||X - diag(1,-1)||_F <= t  ->  X = diag(1,0), t = 1
    ProblemBuilder bl(4);
    bl.cost(3, 1.0);
    detail::self_psd_rows(bl, 0, 3);
    Eigen::MatrixXd d(2, 2);
    d << 1, 0, 0, -1;
    const Eigen::VectorXd q = -conic::svec(SymMatrix(d));
    std::vector<std::vector<std::pair<int, double>>> p(3);
    for (int r = 0; r < 3; ++r) p[r] = {{r, 1.0}};
    detail::arrow_rows(bl, 3, p, q);
    Eigen::VectorXd z(4);
    z << 1.0, 0.0, 0.0, 1.0;
    out.push_back({"psd_projection_fro", bl.finish(0, 0, {2, 4}), conic::SolveStatus::Optimal, 1.0, z});
  }
  {  // min t : X Toeplitz (equal diagonal), X >= 0, ||X - M||_F <= t
     // with M = [[1,2],[2,3]]  ->  X = [[2,2],[2,2]], t = sqrt(2)
    ProblemBuilder bl(4);
    bl.cost(3, 1.0);
    const int r = bl.row(0.0);
    bl.entry(r, 0, 1.0);
    bl.entry(r, 2, -1.0);
    detail::self_psd_rows(bl, 0, 3);
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 2, 3;
    const Eigen::VectorXd q = -conic::svec(SymMatrix(m));
    std::vector<std::vector<std::pair<int, double>>> p(3);
    for (int rr = 0; rr < 3; ++rr) p[rr] = {{rr, 1.0}};
    detail::arrow_rows(bl, 3, p, q);
    Eigen::VectorXd z(4);
    z << 2.0, 2.0 * s2, 2.0, std::sqrt(2.0);
    out.push_back({"toeplitz_projection_fro", bl.finish(1, 0, {2, 4}),
                   conic::SolveStatus::Optimal, std::sqrt(2.0), z});
  }
  {  // x >= 1 and x <= 0: infeasible
    ProblemBuilder bl(1);
    bl.cost(0, 1.0);
    int r = bl.row(-1.0);
    bl.entry(r, 0, -1.0);
    r = bl.row(0.0);
    bl.entry(r, 0, 1.0);
    out.push_back({"lp_infeasible", bl.finish(0, 2, {}), conic::SolveStatus::Infeasible, 0.0,
                   std::nullopt});
  }
  {  // min x : x <= 5, unbounded below
    ProblemBuilder bl(1);
    bl.cost(0, 1.0);
    const int r = bl.row(5.0);
    bl.entry(r, 0, 1.0);
    out.push_back({"lp_unbounded", bl.finish(0, 1, {}), conic::SolveStatus::Unbounded, 0.0,
                   std::nullopt});
  }
  {  // tr X = -1, X >= 0: infeasible
    ProblemBuilder bl(3);
    bl.cost(0, 1.0);
    const int r = bl.row(-1.0);
    bl.entry(r, 0, 1.0);
    bl.entry(r, 2, 1.0);
    detail::self_psd_rows(bl, 0, 3);
    out.push_back({"sdp_infeasible", bl.finish(1, 0, {2}), conic::SolveStatus::Infeasible, 0.0,
                   std::nullopt});
  }
  return out;
}

// Tolerances used when solving the oracle library: tight enough that the
// independently recomputed KKT residuals land well under 1e-6.
inline conic::SolveOptions oracle_options() {
  conic::SolveOptions o;
  o.eps_abs = 1e-9;
  o.eps_rel = 1e-9;
  o.max_iters = 200000;
  return o;
}

}  // namespace covstruct::testlib
