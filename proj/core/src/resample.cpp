#include "deblur/resample.hpp"

#include <algorithm>
#include <cmath>

#include "deblur/geometry.hpp"

namespace deblur {

namespace {

const double kBinomial5[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

Image binomial_lowpass(const Image& img) {
  Image tmp(img.width, img.height, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t)
        acc += kBinomial5[t + 2] * img.at(wrap(x + t, img.width), y);
      tmp.at(x, y) = acc;
    }
  Image out(img.width, img.height, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t)
        acc += kBinomial5[t + 2] * tmp.at(x, wrap(y + t, img.height));
      out.at(x, y) = acc;
    }
  return out;
}

// ≈ one prefilter pass per octave of shrink (none when upsizing).
int prefilter_passes(int src_w, int src_h, int dst_w, int dst_h) {
  const double r = std::max(static_cast<double>(src_w) / dst_w,
                            static_cast<double>(src_h) / dst_h);
  if (r <= 1.0) return 0;
  return static_cast<int>(std::lround(std::log2(r)));
}

struct Tap {
  int i0, i1;
  double w0, w1;
};

// Centers-aligned source position for destination index x, edge-clamped.
Tap tap_for(int x, int dst_n, int src_n) {
  const double s = (x + 0.5) * static_cast<double>(src_n) / dst_n - 0.5;
  const int i0 = static_cast<int>(std::floor(s));
  const double f = s - i0;
  Tap t;
  t.i0 = std::clamp(i0, 0, src_n - 1);
  t.i1 = std::clamp(i0 + 1, 0, src_n - 1);
  t.w0 = 1.0 - f;
  t.w1 = f;
  return t;
}

}  // namespace

Image downsample2(const Image& img) {
  const int w = img.width / 2, h = img.height / 2;
  if (w < 1 || h < 1) throw DimensionError("downsample2: result dimension < 1");
  const Image filtered = binomial_lowpass(img);
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = filtered.at(2 * x, 2 * y);
  return out;
}

Image upsample2(const Image& img) {
  return resize_bilinear(img, img.width * 2, img.height * 2);
}

Image resize_bilinear(const Image& img, int w, int h) {
  if (w < 1 || h < 1) throw DimensionError("resize_bilinear: result dimension < 1");
  Image src = img;
  for (int p = prefilter_passes(img.width, img.height, w, h); p > 0; --p)
    src = binomial_lowpass(src);
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const Tap ty = tap_for(y, h, src.height);
    for (int x = 0; x < w; ++x) {
      const Tap tx = tap_for(x, w, src.width);
      out.at(x, y) = ty.w0 * (tx.w0 * src.at(tx.i0, ty.i0) + tx.w1 * src.at(tx.i1, ty.i0)) +
                     ty.w1 * (tx.w0 * src.at(tx.i0, ty.i1) + tx.w1 * src.at(tx.i1, ty.i1));
    }
  }
  return out;
}

Image resize_bilinear_adjoint(const Image& delta_out, int src_w, int src_h) {
  Image acc(src_w, src_h, 0.0);
  for (int y = 0; y < delta_out.height; ++y) {
    const Tap ty = tap_for(y, delta_out.height, src_h);
    for (int x = 0; x < delta_out.width; ++x) {
      const Tap tx = tap_for(x, delta_out.width, src_w);
      const double d = delta_out.at(x, y);
      acc.at(tx.i0, ty.i0) += d * ty.w0 * tx.w0;
      acc.at(tx.i1, ty.i0) += d * ty.w0 * tx.w1;
      acc.at(tx.i0, ty.i1) += d * ty.w1 * tx.w0;
      acc.at(tx.i1, ty.i1) += d * ty.w1 * tx.w1;
    }
  }
  // The binomial taps are symmetric, so each prefilter pass is self-adjoint.
  for (int p = prefilter_passes(src_w, src_h, delta_out.width, delta_out.height); p > 0; --p)
    acc = binomial_lowpass(acc);
  return acc;
}

}  // namespace deblur
