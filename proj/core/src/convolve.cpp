#include "deblur/convolve.hpp"

#include "deblur/geometry.hpp"

namespace deblur {

Image convolve_circular(const Image& img, const BlurKernel& ker) {
  if (ker.size > std::min(img.width, img.height))
    throw DimensionError("convolve_circular: kernel larger than image");
  const Spectrum fimg = fft2(img);
  const Spectrum fker = fft2(embed_kernel_at_origin(ker, img.width, img.height));
  Spectrum prod(img.width, img.height);
  for (size_t i = 0; i < prod.data.size(); ++i)
    prod.data[i] = fimg.data[i] * fker.data[i];
  return ifft2(prod);
}

namespace {

void require_odd_taps(const Image& taps, const Image& img, const char* where) {
  if (taps.width != taps.height || taps.width % 2 == 0)
    throw DimensionError(std::string(where) + ": taps must be odd square");
  if (taps.width > std::min(img.width, img.height))
    throw DimensionError(std::string(where) + ": taps larger than image");
}

}  // namespace

Image filter_circular(const Image& img, const Image& taps) {
  require_odd_taps(taps, img, "filter_circular");
  const int r = taps.width / 2;
  Image out(img.width, img.height, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int sy = wrap(y - dy, img.height);
        for (int dx = -r; dx <= r; ++dx)
          acc += taps.at(dx + r, dy + r) * img.at(wrap(x - dx, img.width), sy);
      }
      out.at(x, y) = acc;
    }
  return out;
}

Image filter_circular_adjoint_image(const Image& delta_out, const Image& taps) {
  require_odd_taps(taps, delta_out, "filter_circular_adjoint_image");
  const int r = taps.width / 2;
  Image out(delta_out.width, delta_out.height, 0.0);
  for (int y = 0; y < delta_out.height; ++y)
    for (int x = 0; x < delta_out.width; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int sy = wrap(y + dy, delta_out.height);
        for (int dx = -r; dx <= r; ++dx)
          acc += taps.at(dx + r, dy + r) * delta_out.at(wrap(x + dx, delta_out.width), sy);
      }
      out.at(x, y) = acc;
    }
  return out;
}

Image filter_circular_adjoint_taps(const Image& delta_out, const Image& img,
                                   int filter_size) {
  if (!delta_out.same_shape(img))
    throw DimensionError("filter_circular_adjoint_taps: shape mismatch");
  const int r = filter_size / 2;
  Image grad(filter_size, filter_size, 0.0);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      double acc = 0.0;
      for (int y = 0; y < img.height; ++y) {
        const int sy = wrap(y - dy, img.height);
        for (int x = 0; x < img.width; ++x)
          acc += delta_out.at(x, y) * img.at(wrap(x - dx, img.width), sy);
      }
      grad.at(dx + r, dy + r) = acc;
    }
  return grad;
}

}  // namespace deblur
