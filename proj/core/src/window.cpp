#include "deblur/window.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace deblur {

namespace {

double barthann_at(double t) {
  // t in [0, 1]; exact zeros at the ends: 0.62 - 0.24 - 0.38 = 0.
  const double u = t - 0.5;
  return 0.62 - 0.48 * std::abs(u) + 0.38 * std::cos(2.0 * std::numbers::pi * u);
}

}  // namespace

std::vector<double> barthann_window(int n) {
  if (n <= 0) throw DimensionError("barthann_window: length must be positive");
  if (n == 1) return {1.0};
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = barthann_at(static_cast<double>(i) / (n - 1));
  return w;
}

Image barthann_border_window(int width, int height, int margin) {
  if (margin < 0 || 2 * margin > std::min(width, height))
    throw DimensionError("barthann_border_window: margin too large");
  auto profile = [&](int n) {
    std::vector<double> p(n, 1.0);
    if (margin == 0) return p;
    // Rising half of a length 2m+1 window: p(0) = 0, p(m) = 1.
    for (int i = 0; i < n; ++i) {
      const int j = std::min(i, n - 1 - i);
      if (j < margin) p[i] = barthann_at(static_cast<double>(j) / (2 * margin));
    }
    return p;
  };
  const auto px = profile(width);
  const auto py = profile(height);
  Image win(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) win.at(x, y) = px[x] * py[y];
  return win;
}

std::vector<double> barthann_bump_open(int n) {
  if (n <= 0) throw DimensionError("barthann_bump_open: length must be positive");
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = barthann_at((i + 0.5) / n);
  return w;
}

}  // namespace deblur
