#include "deblur/geometry.hpp"

namespace deblur {

Image circular_shift(const Image& img, int dx, int dy) {
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const int sy = wrap(y - dy, img.height);
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = img.at(wrap(x - dx, img.width), sy);
  }
  return out;
}

Image crop_center(const Image& img, int w, int h) {
  if (w > img.width || h > img.height || w <= 0 || h <= 0)
    throw DimensionError("crop_center: target larger than source");
  const int ox = (img.width - w) / 2;
  const int oy = (img.height - h) / 2;
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = img.at(ox + x, oy + y);
  return out;
}

Image pad_or_embed(const Image& small, int w, int h) {
  if (small.width > w || small.height > h)
    throw DimensionError("pad_or_embed: source larger than target");
  const int ox = (w - small.width) / 2;
  const int oy = (h - small.height) / 2;
  Image out(w, h, 0.0);
  for (int y = 0; y < small.height; ++y)
    for (int x = 0; x < small.width; ++x) out.at(ox + x, oy + y) = small.at(x, y);
  return out;
}

Image embed_kernel_at_origin(const BlurKernel& k, int w, int h) {
  if (k.size > w || k.size > h)
    throw DimensionError("embed_kernel_at_origin: kernel larger than frame");
  Image out(w, h, 0.0);
  const int c = k.size / 2;
  for (int y = 0; y < k.size; ++y)
    for (int x = 0; x < k.size; ++x)
      out.at(wrap(x - c, w), wrap(y - c, h)) = k.at(x, y);
  return out;
}

Image gather_kernel_from_origin(const Image& full, int kernel_size) {
  if (kernel_size > full.width || kernel_size > full.height)
    throw DimensionError("gather_kernel_from_origin: kernel larger than frame");
  Image out(kernel_size, kernel_size);
  const int c = kernel_size / 2;
  for (int y = 0; y < kernel_size; ++y)
    for (int x = 0; x < kernel_size; ++x)
      out.at(x, y) = full.at(wrap(x - c, full.width), wrap(y - c, full.height));
  return out;
}

void center_of_mass(const Image& img, double* cx, double* cy) {
  double m = 0.0, mx = 0.0, my = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double v = img.at(x, y);
      m += v;
      mx += v * x;
      my += v * y;
    }
  if (m <= 0.0) {
    *cx = (img.width - 1) / 2.0;
    *cy = (img.height - 1) / 2.0;
    return;
  }
  *cx = mx / m;
  *cy = my / m;
}

}  // namespace deblur
