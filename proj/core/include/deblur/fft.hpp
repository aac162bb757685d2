#pragma once

#include <complex>
#include <vector>

#include "deblur/image.hpp"

namespace deblur {

// Complex 2-D spectrum, row-major, same layout as the Image it came from.
struct Spectrum {
  int width = 0;
  int height = 0;
  std::vector<std::complex<double>> data;

  Spectrum() = default;
  Spectrum(int w, int h);

  std::complex<double>& at(int x, int y) {
    return data[static_cast<size_t>(y) * width + x];
  }
  std::complex<double> at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  bool same_shape(const Spectrum& other) const {
    return width == other.width && height == other.height;
  }
};

// Unnormalized forward DFT; the inverse carries the 1/(W·H) factor, so the
// closed-form quotient expressions hold verbatim with ⊙ and elementwise
// division. Plans are cached per size and planning is serialized; execution
// is safe from multiple threads.
Spectrum fft2(const Image& img);

// Inverse transform; returns the real part. The imaginary residue of a
// Hermitian-symmetric spectrum is rounding noise; pass `max_imag` to inspect
// it (tests assert < 1e-9).
Image ifft2(const Spectrum& spec, double* max_imag = nullptr);

}  // namespace deblur
