#pragma once

#include "deblur/image.hpp"

namespace deblur {

// Halves each dimension (floor) after a separable 5-tap binomial low-pass
// ([1,4,6,4,1]/16, circular boundary), then decimates at even coordinates.
Image downsample2(const Image& img);

// Doubles each dimension by bilinear interpolation (centers-aligned mapping,
// edges clamped). upsample2(1×1 of v) is the 2×2 constant v.
Image upsample2(const Image& img);

// General bilinear resize with the same centers-aligned convention. When
// shrinking by 2× or more per axis, binomial prefilter passes suppress
// aliasing first (one pass per halving).
Image resize_bilinear(const Image& img, int w, int h);

// Adjoint of resize_bilinear as a linear map from (src_w, src_h) images to
// delta_out's shape — needed to backpropagate across scales.
Image resize_bilinear_adjoint(const Image& delta_out, int src_w, int src_h);

}  // namespace deblur
