#include "covstruct/sampler.hpp"

#include <cmath>

#include "covstruct/rng.hpp"

namespace covstruct {

TextureLaw TextureLaw::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw InvalidInput("TextureLaw::constant: value must be positive");
  TextureLaw t;
  t.kind = Kind::Constant;
  t.value = value;
  return t;
}

TextureLaw TextureLaw::chi_square(int dof) {
  if (dof < 1) throw InvalidInput("TextureLaw::chi_square: dof must be >= 1");
  TextureLaw t;
  t.kind = Kind::ChiSquare;
  t.dof = dof;
  return t;
}

double TextureLaw::mean() const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::ChiSquare: return static_cast<double>(dof);
  }
  throw InvalidInput("TextureLaw: unknown kind");
}

namespace {

// F with F F^T = shape. Cholesky when positive definite, eigendecomposition
// fallback for the semidefinite case.
Eigen::MatrixXd shape_factor(const SymMatrix& shape) {
  Eigen::LLT<Eigen::MatrixXd> llt(shape.mat());
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const EigenPair ep = eig_sym(shape);
  const double top = ep.values.cwiseAbs().maxCoeff();
  if (ep.values.minCoeff() < -1e-10 * std::max(top, 1.0))
    throw InvalidShape("sample_elliptical: shape is not PSD");
  Eigen::VectorXd sq = ep.values.cwiseMax(0.0).cwiseSqrt();
  return ep.vectors * sq.asDiagonal();
}

}  // namespace

SampleSet sample_elliptical(const SymMatrix& shape, const TextureLaw& texture,
                            int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample_elliptical: n must be >= 1");
  if (shape.empty() || !shape.all_finite())
    throw InvalidInput("sample_elliptical: bad shape matrix");
  if (!(shape.trace() > 0.0))
    throw InvalidShape("sample_elliptical: shape trace must be positive");
  const int p = shape.dim();
  const Eigen::MatrixXd f = shape_factor(shape);

  Rng gauss(mix_seed(seed, kGaussianStream));
  Rng tex(mix_seed(seed, kTextureStream));

  SampleSet out;
  out.samples.resize(p, n);
  out.seed = seed;
  out.texture = texture;

  Eigen::VectorXd z(p), x(p);
  for (int j = 0; j < n; ++j) {
    for (;;) {
      for (int i = 0; i < p; ++i) z[i] = gauss.gaussian();
      double tau = 1.0;
      switch (texture.kind) {
        case TextureLaw::Kind::Constant: tau = texture.value; break;
        case TextureLaw::Kind::ChiSquare: tau = tex.chi_square(texture.dof); break;
      }
      x.noalias() = f * z;
      x *= std::sqrt(tau);
      if (x.squaredNorm() > 0.0) break;
    }
    out.samples.col(j) = x;
  }
  return out;
}

SampleSet normalize_samples(const SampleSet& x) {
  SampleSet out = x;
  for (int j = 0; j < out.count(); ++j) {
    const double nrm = out.samples.col(j).norm();
    if (!(nrm > 0.0))
      throw DegenerateSample("normalize_samples: zero sample");
    out.samples.col(j) /= nrm;
  }
  return out;
}

}  // namespace covstruct
