#include "deblur/image.hpp"

#include <cmath>
#include <string>

namespace deblur {

Image::Image(int w, int h, double fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DimensionError("Image: dimensions must be positive");
  data.assign(static_cast<size_t>(w) * h, fill);
}

BlurKernel::BlurKernel(int n, double fill) : size(n) {
  if (n < 3 || n % 2 == 0) throw DimensionError("BlurKernel: size must be odd and >= 3");
  weights.assign(static_cast<size_t>(n) * n, fill);
}

BlurKernel identity_kernel(int size) {
  BlurKernel k(size);
  k.at(size / 2, size / 2) = 1.0;
  return k;
}

Image to_image(const BlurKernel& k) {
  Image img(k.size, k.size);
  img.data = k.weights;
  return img;
}

BlurKernel to_kernel(const Image& img) {
  if (img.width != img.height || img.width % 2 == 0)
    throw DimensionError("to_kernel: image must be odd square");
  BlurKernel k(img.width);
  k.weights = img.data;
  return k;
}

double dot(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("dot: shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double max_abs(const Image& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

double sum(const Image& a) {
  double s = 0.0;
  for (double v : a.data) s += v;
  return s;
}

Image operator*(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("Image*: shape mismatch");
  Image out(a.width, a.height);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

Image operator+(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("Image+: shape mismatch");
  Image out(a.width, a.height);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

Image operator-(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("Image-: shape mismatch");
  Image out(a.width, a.height);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

Image scaled(const Image& a, double s) {
  Image out(a.width, a.height);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * s;
  return out;
}

void accumulate(Image& dst, const Image& src) {
  if (!dst.same_shape(src)) throw DimensionError("accumulate: shape mismatch");
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void check_finite(const Image& a, const char* where) {
  for (double v : a.data)
    if (!std::isfinite(v))
      throw NumericError(std::string(where) + ": non-finite value in image");
}

}  // namespace deblur
