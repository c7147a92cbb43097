#include <cmath>
#include <random>

#include "doctest.h"

#include "covstruct/structures.hpp"

using namespace covstruct;

namespace {

Eigen::MatrixXd random_sym(int p, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = g(gen);
  return 0.5 * (m + m.transpose()).eval();
}

}  // namespace

TEST_SUITE("structures") {
  TEST_CASE("compile_constraints row counts") {
    const AffineConstraintSet toe = compile_constraints(StructureSpec::toeplitz(), 3);
    CHECK(toe.eq.rows() == 3);  // p(p+1)/2 - p independent diagonal equalities
    CHECK(toe.aux_nonneg == 0);
    CHECK(toe.aux_psd_dims.empty());

    const AffineConstraintSet band = compile_constraints(StructureSpec::banded(1), 3);
    CHECK(band.eq.rows() == 1);  // only entry (0,2)

    const AffineConstraintSet un =
        compile_constraints(StructureSpec::unconstrained(), 4);
    CHECK(un.eq.rows() == 0);
    CHECK(un.total_vars() == 10);

    const AffineConstraintSet lr =
        compile_constraints(StructureSpec::low_rank_plus_noise(0.1, 1.0), 3);
    CHECK(lr.aux_psd_dims == std::vector<int>{3});
    CHECK(lr.aux_nonneg == 1);  // slack for trace(X) <= beta
  }

  TEST_CASE("compile_constraints validates the spec") {
    CHECK_THROWS_AS(compile_constraints(StructureSpec::banded(-1), 3), InvalidSpec);
    CHECK_THROWS_AS(compile_constraints(StructureSpec::banded(3), 3), InvalidSpec);
    CHECK_THROWS_AS(compile_constraints(StructureSpec::low_rank_plus_noise(-0.1, 1.0), 3),
                    InvalidSpec);
    CHECK_THROWS_AS(compile_constraints(StructureSpec::low_rank_plus_noise(0.1, 0.0), 3),
                    InvalidSpec);
    CHECK_THROWS_AS(
        compile_constraints(
            StructureSpec::linear_param({Eigen::VectorXd::Zero(3)}, 1.0), 3),
        InvalidSpec);
    // atom dimension mismatch
    CHECK_THROWS_AS(
        compile_constraints(
            StructureSpec::linear_param({Eigen::VectorXd::Ones(2)}, 1.0), 3),
        InvalidSpec);
  }

  TEST_CASE("project_frobenius closed forms") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 2.0, 2.0, 3.0;
    const SymMatrix toe = project_frobenius(StructureSpec::toeplitz(), SymMatrix(m));
    Eigen::MatrixXd want(2, 2);
    want << 2.0, 2.0, 2.0, 2.0;
    CHECK((toe.mat() - want).cwiseAbs().maxCoeff() <= 1e-15);

    const SymMatrix m3(random_sym(3, 17u));
    const SymMatrix band = project_frobenius(StructureSpec::banded(1), m3);
    CHECK(band(0, 2) == 0.0);
    CHECK(band(2, 0) == 0.0);
    CHECK(band(0, 1) == m3(0, 1));
    CHECK(band(1, 2) == m3(1, 2));
    CHECK(band(0, 0) == m3(0, 0));

    // idempotence
    const SymMatrix again = project_frobenius(StructureSpec::toeplitz(), toe);
    CHECK((again.mat() - toe.mat()).cwiseAbs().maxCoeff() <= 1e-15);

    // unconstrained is the identity map
    const SymMatrix id = project_frobenius(StructureSpec::unconstrained(), m3);
    CHECK((id.mat() - m3.mat()).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(
        project_frobenius(StructureSpec::low_rank_plus_noise(0.1, 1.0), m3),
        UnsupportedSpec);
  }

  TEST_CASE("project_frobenius is nonexpansive toward the subspace") {
    // T in the subspace: projections never move a point farther from T.
    for (std::uint32_t seed : {3u, 5u, 8u}) {
      const SymMatrix m(random_sym(4, seed));
      for (const StructureSpec& spec :
           {StructureSpec::toeplitz(), StructureSpec::banded(1)}) {
        const SymMatrix t = project_frobenius(spec, SymMatrix(random_sym(4, seed + 100)));
        const SymMatrix pm = project_frobenius(spec, m);
        CHECK(frobenius_norm(SymMatrix(pm.mat() - t.mat())) <=
              frobenius_norm(SymMatrix(m.mat() - t.mat())) + 1e-12);
      }
    }
  }

  TEST_CASE("contains: toeplitz and banded") {
    Eigen::MatrixXd yes(2, 2), no(2, 2);
    yes << 2.0, 2.0, 2.0, 2.0;
    no << 1.0, 2.0, 2.0, 3.0;
    CHECK(contains(StructureSpec::toeplitz(), SymMatrix(yes)));
    CHECK_FALSE(contains(StructureSpec::toeplitz(), SymMatrix(no)));

    Eigen::MatrixXd nearband = Eigen::MatrixXd::Identity(3, 3);
    nearband(0, 2) = nearband(2, 0) = 1e-12;
    CHECK(contains(StructureSpec::banded(1), SymMatrix(nearband), 1e-10));
    nearband(0, 2) = nearband(2, 0) = 1e-3;
    CHECK_FALSE(contains(StructureSpec::banded(1), SymMatrix(nearband), 1e-10));

    CHECK(contains(StructureSpec::unconstrained(), SymMatrix(random_sym(3, 1u))));
  }

  TEST_CASE("contains: low rank plus noise feasibility") {
    const double s2 = 0.1;
    Eigen::VectorXd v(3);
    v << 1.0, 2.0, 2.0;
    v.normalize();
    const Eigen::MatrixXd x = v * v.transpose();  // PSD, trace 1

    const SymMatrix inside(x + s2 * Eigen::MatrixXd::Identity(3, 3));
    CHECK(contains(StructureSpec::low_rank_plus_noise(s2, 1.0), inside, 1e-9));
    CHECK(contains(StructureSpec::low_rank_plus_noise(s2, 0.5), inside, 1e-9) == false);

    // X = C - sigma2 I indefinite: not in the set
    const SymMatrix outside(0.5 * x + s2 * Eigen::MatrixXd::Identity(3, 3) -
                            0.2 * Eigen::MatrixXd::Identity(3, 3));
    CHECK_FALSE(contains(StructureSpec::low_rank_plus_noise(s2, 1.0), outside, 1e-9));
  }

  TEST_CASE("contains: linear parameterization feasibility program") {
    std::vector<Eigen::VectorXd> atoms;
    atoms.push_back(Eigen::Vector3d(1.0, 0.0, 0.0));
    atoms.push_back(Eigen::Vector3d(0.0, 1.0, 0.0));
    atoms.push_back(Eigen::Vector3d(0.0, 0.0, 1.0));
    const StructureSpec spec = StructureSpec::linear_param(atoms, 2.0);

    Eigen::MatrixXd in = Eigen::Vector3d(0.5, 0.7, 0.3).asDiagonal();
    CHECK(contains(spec, SymMatrix(in), 1e-7));

    // exceeds the budget sum p_i <= 2
    Eigen::MatrixXd heavy = Eigen::Vector3d(1.5, 1.0, 0.5).asDiagonal();
    CHECK_FALSE(contains(spec, SymMatrix(heavy), 1e-7));

    // off-diagonal mass is not expressible with axis atoms
    Eigen::MatrixXd off = in;
    off(0, 1) = off(1, 0) = 0.2;
    CHECK_FALSE(contains(spec, SymMatrix(off), 1e-7));
  }

  TEST_CASE("make_toeplitz_target") {
    const SymMatrix t2 = make_toeplitz_target(2, 0.5);
    CHECK(t2(0, 0) == 1.0);
    CHECK(t2(0, 1) == 0.5);
    CHECK(t2(1, 1) == 1.0);

    const SymMatrix t3 = make_toeplitz_target(3, 0.8);
    const EigenPair ep = eig_sym(t3);
    CHECK(ep.values.minCoeff() > 0.0);
    CHECK(contains(StructureSpec::toeplitz(), t3));

    CHECK_THROWS_AS(make_toeplitz_target(3, 0.0), InvalidSpec);
    CHECK_THROWS_AS(make_toeplitz_target(3, 1.0), InvalidSpec);
    CHECK_THROWS_AS(make_toeplitz_target(0, 0.5), InvalidSpec);
  }

  TEST_CASE("make_banded_target layout and positive definiteness") {
    const BandedTarget bt = make_banded_target(20);
    const SymMatrix& m = bt.matrix;
    for (int i = 0; i < 20; ++i) CHECK(m(i, i) == doctest::Approx(21.0 + i));
    for (int i = 0; i < 19; ++i) CHECK(m(i, i + 1) == doctest::Approx(1.0 + i));
    for (int i = 0; i < 18; ++i) CHECK(m(i, i + 2) == doctest::Approx(1.0 + i));
    CHECK(m(0, 3) == 0.0);
    CHECK(contains(StructureSpec::banded(2), m));
    CHECK(bt.shift == 0.0);
    // frozen eigenvalue oracle for the p=20 construction
    CHECK(bt.min_eigenvalue == doctest::Approx(5.202376934244).epsilon(1e-9));

    const BandedTarget b10 = make_banded_target(10);
    CHECK(b10.shift == 0.0);
    CHECK(b10.min_eigenvalue == doctest::Approx(15.160652832910).epsilon(1e-9));
  }
}
