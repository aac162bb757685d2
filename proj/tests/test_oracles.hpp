#pragma once

// Reference implementations the tests trust instead of the library code:
// quadratic-time DFT, direct spatial circular convolution, and central
// finite differences. Deliberately naive and kept independent of the
// library's FFT/adjoint code paths.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "deblur/fft.hpp"
#include "deblur/image.hpp"
#include "deblur/rng.hpp"

namespace oracle {

// Brute-force unnormalized forward DFT, O((WH)²).
inline deblur::Spectrum dft2(const deblur::Image& img) {
  const int W = img.width, H = img.height;
  deblur::Spectrum out(W, H);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      std::complex<double> acc = 0.0;
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double phase = -2.0 * std::numbers::pi *
                               (static_cast<double>(u) * x / W +
                                static_cast<double>(v) * y / H);
          acc += img.at(x, y) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      out.at(u, v) = acc;
    }
  return out;
}

// Direct spatial circular convolution with a centered odd kernel.
inline deblur::Image spatial_convolve(const deblur::Image& img,
                                      const deblur::BlurKernel& ker) {
  const int W = img.width, H = img.height, r = ker.size / 2;
  auto md = [](int v, int n) { return ((v % n) + n) % n; };
  deblur::Image out(W, H, 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          acc += ker.at(dx + r, dy + r) * img.at(md(x - dx, W), md(y - dy, H));
      out.at(x, y) = acc;
    }
  return out;
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// max|a-b| / max(max|a|, max|b|, floor) — the relative metric all gradient
// checks report.
inline double rel_error_inf(const std::vector<double>& a, const std::vector<double>& b,
                            double floor_ = 1e-8) {
  double diff = 0.0, mag = floor_;
  for (size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    mag = std::max({mag, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / mag;
}

inline deblur::Image random_image(int w, int h, deblur::Rng& rng, double lo = 0.0,
                                  double hi = 1.0) {
  deblur::Image img(w, h);
  for (auto& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

inline deblur::BlurKernel random_simplex_kernel(int size, deblur::Rng& rng) {
  deblur::BlurKernel k(size);
  double s = 0.0;
  for (auto& v : k.weights) {
    v = rng.uniform();
    s += v;
  }
  for (auto& v : k.weights) v /= s;
  return k;
}

inline double max_abs_diff(const deblur::Image& a, const deblur::Image& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace oracle
