#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "covstruct/errors.hpp"
#include "covstruct/sym_matrix.hpp"

namespace covstruct {

// Distribution of the texture (scale) variable tau in x = sqrt(tau) * v.
struct TextureLaw {
  enum class Kind { Constant, ChiSquare };

  Kind kind = Kind::Constant;
  double value = 1.0;  // Constant: the fixed tau (> 0)
  int dof = 1;         // ChiSquare: degrees of freedom (>= 1)

  static TextureLaw constant(double value = 1.0);
  static TextureLaw chi_square(int dof);

  double mean() const;  // E[tau]
};

// A batch of draws, one sample per column, plus the provenance needed to
// reproduce it.
struct SampleSet {
  Eigen::MatrixXd samples;  // p x n
  std::uint64_t seed = 0;
  TextureLaw texture;

  int dim() const { return static_cast<int>(samples.rows()); }
  int count() const { return static_cast<int>(samples.cols()); }
};

// Draws n samples x_i = sqrt(tau_i) * F z_i with z_i standard normal and
// F F^T = shape. The Gaussian and texture substreams are derived from `seed`
// with fixed tags, so two laws driven by the same seed consume identical
// Gaussian streams. Zero draws (measure zero) are rejected and redrawn, so
// every returned sample is nonzero.
SampleSet sample_elliptical(const SymMatrix& shape, const TextureLaw& texture,
                            int n, std::uint64_t seed);

// Scales every column to unit Euclidean norm. Throws DegenerateSample on a
// zero column.
SampleSet normalize_samples(const SampleSet& x);

}  // namespace covstruct
