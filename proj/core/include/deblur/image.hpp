#pragma once

#include <cstddef>
#include <vector>

#include "deblur/errors.hpp"

namespace deblur {

// Row-major grayscale raster. Values are doubles with nominal range [0,1]
// but are not clamped; intermediate feature images roam freely.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }
};

// Small square PSF, odd side length. Only normalized (nonnegative, sum 1)
// after kernel post-processing; raw estimates may violate both.
struct BlurKernel {
  int size = 0;
  std::vector<double> weights;

  BlurKernel() = default;
  explicit BlurKernel(int n, double fill = 0.0);

  double& at(int x, int y) { return weights[static_cast<size_t>(y) * size + x]; }
  double at(int x, int y) const { return weights[static_cast<size_t>(y) * size + x]; }
};

// Kernel with all mass on the center pixel (identity under convolution).
BlurKernel identity_kernel(int size);

Image to_image(const BlurKernel& k);
BlurKernel to_kernel(const Image& img);  // requires odd square image

// Elementwise helpers shared across modules.
double dot(const Image& a, const Image& b);
double max_abs(const Image& a);
double sum(const Image& a);
Image operator*(const Image& a, const Image& b);  // Hadamard
Image operator+(const Image& a, const Image& b);
Image operator-(const Image& a, const Image& b);
Image scaled(const Image& a, double s);
void accumulate(Image& dst, const Image& src);  // dst += src

// Throws NumericError if any entry is NaN/Inf; `where` names the producer.
void check_finite(const Image& a, const char* where);

}  // namespace deblur
