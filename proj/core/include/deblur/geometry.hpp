#pragma once

#include "deblur/image.hpp"

namespace deblur {

// Wraps v into [0, n).
inline int wrap(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}

// out(x, y) = in((x - dx) mod W, (y - dy) mod H): content moves by (+dx, +dy).
Image circular_shift(const Image& img, int dx, int dy);

// Centered crop/embed pair. Offsets use floor((big - small) / 2), so for odd
// sizes the center pixel maps to the center pixel and crop ∘ embed = id.
Image crop_center(const Image& img, int w, int h);
Image pad_or_embed(const Image& small, int w, int h);

// Pixel where pad_or_embed lands the center of an odd `small` inside `big`;
// equals big/2 for odd big and big/2 - 1 for even big.
inline int embedded_center(int big, int small) {
  return (big - small) / 2 + small / 2;
}

// Embeds a kernel into a w×h frame with its center pixel at (0, 0), negative
// taps wrapping around — the frame whose FFT makes circular convolution
// translation-free.
Image embed_kernel_at_origin(const BlurKernel& k, int w, int h);

// Adjoint of embed_kernel_at_origin: gathers a full-frame gradient back onto
// the kernel support.
Image gather_kernel_from_origin(const Image& full, int kernel_size);

// Center of mass in pixel coordinates. Degenerate (nonpositive total mass)
// falls back to the geometric center.
void center_of_mass(const Image& img, double* cx, double* cy);

}  // namespace deblur
