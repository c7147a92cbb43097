#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "covstruct/errors.hpp"

namespace covstruct {

// splitmix64 finalizer. Used as the one-way mixing step everywhere a seed is
// derived from another seed, so substreams never collide by accident.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Child seed from (parent, word). Chained calls give the documented stream
// tree: trial seed = mix_seed(mix_seed(base, n), trial); the sampler then
// splits into gaussian/texture substreams with the tags below.
inline std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t word) {
  return splitmix64(parent ^ splitmix64(word + 0x9e3779b97f4a7c15ull));
}

inline constexpr std::uint64_t kGaussianStream = 0x7361756767ull;  // "gauss"
inline constexpr std::uint64_t kTextureStream = 0x6572757478ull;   // "xture"

// Deterministic random source. mt19937_64 plus fixed-form transforms only
// (no std::*_distribution, whose output is implementation-defined), so the
// byte stream is reproducible across platforms and library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Consumes exactly two uniforms per pair;
  // the second variate is cached, so consumption per call is fixed.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // in (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Chi-square with `dof` degrees of freedom as a sum of squared normals.
  double chi_square(int dof) {
    if (dof < 1) throw InvalidInput("chi_square: dof must be >= 1");
    double s = 0.0;
    for (int i = 0; i < dof; ++i) {
      const double z = gaussian();
      s += z * z;
    }
    return s;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace covstruct
