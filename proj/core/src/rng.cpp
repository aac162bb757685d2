#include "deblur/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace deblur {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::integer(uint64_t n) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max() / n * n;
  uint64_t r;
  do {
    r = gen_();
  } while (r >= limit);
  return r % n;
}

}  // namespace deblur
