#pragma once

#include <cstdint>
#include <random>

namespace deblur {

// Seeded random stream. Uniforms come straight off mt19937_64 and normals
// through Box-Muller, so sequences are bit-reproducible across platforms and
// standard libraries (std::normal_distribution's algorithm is not pinned by
// the standard).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal();

  // Uniform integer in [0, n), unbiased by rejection.
  uint64_t integer(uint64_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace deblur
