#pragma once

#include <vector>

#include "deblur/image.hpp"

namespace deblur {

// Modified Bartlett-Hann window of length n:
//   w(i) = 0.62 - 0.48|i/(n-1) - 1/2| + 0.38 cos(2π(i/(n-1) - 1/2)),
// with w(0) = w(n-1) = 0 exactly and peak 1 at the middle. n = 1 gives {1}.
std::vector<double> barthann_window(int n);

// Separable border taper: 1 in the interior, fading to exactly 0 on the
// outermost rows/columns following the rising half of a Barthann window of
// length 2·margin+1 along each axis. margin = 0 returns all ones.
// Requires 2·margin <= min(width, height).
Image barthann_border_window(int width, int height, int margin);

// Full Bartlett-Hann bump sampled at half-pixel offsets, t = (i+1/2)/n, so
// every value is strictly positive — the per-patch weight used to build
// partition-of-unity patch grids.
std::vector<double> barthann_bump_open(int n);

}  // namespace deblur
