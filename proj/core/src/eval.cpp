#include "deblur/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "deblur/errors.hpp"
#include "deblur/geometry.hpp"
#include "deblur/rng.hpp"

namespace deblur {

double kernel_mse(const BlurKernel& estimated, const BlurKernel& truth) {
  const int frame = std::max(estimated.size, truth.size);
  const Image a = pad_or_embed(to_image(estimated), frame, frame);
  const Image b = pad_or_embed(to_image(truth), frame, frame);

  double ax = 0.0, ay = 0.0, bx = 0.0, by = 0.0;
  center_of_mass(a, &ax, &ay);
  center_of_mass(b, &bx, &by);
  const int dx = static_cast<int>(std::lround(bx - ax));
  const int dy = static_cast<int>(std::lround(by - ay));
  const Image aligned = circular_shift(a, dx, dy);

  double sq = 0.0;
  for (size_t i = 0; i < aligned.data.size(); ++i) {
    const double d = aligned.data[i] - b.data[i];
    sq += d * d;
  }
  return sq / static_cast<double>(frame * frame);
}

namespace {

double mean_squared_error(const Image& a, const Image& b, int border) {
  if (!a.same_shape(b)) throw DimensionError("psnr inputs differ in shape");
  if (a.width <= 2 * border || a.height <= 2 * border)
    throw DimensionError("psnr border leaves no interior");
  double sq = 0.0;
  size_t n = 0;
  for (int y = border; y < a.height - border; ++y)
    for (int x = border; x < a.width - border; ++x) {
      const double d = a.at(x, y) - b.at(x, y);
      sq += d * d;
      ++n;
    }
  return sq / static_cast<double>(n);
}

double mse_to_db(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  return mse_to_db(mean_squared_error(a, b, 0));
}

double psnr_interior(const Image& a, const Image& b, int border) {
  return mse_to_db(mean_squared_error(a, b, border));
}

std::vector<RuntimeCell> runtime_table(const MultiScaleModel& model,
                                       const std::vector<std::pair<int, int>>& sizes,
                                       int reps) {
  validate_model(model);
  std::vector<RuntimeCell> cells;
  for (const auto& [dim, ks] : sizes) {
    Rng rng(0x5eed + static_cast<uint64_t>(dim) * 131 + static_cast<uint64_t>(ks));
    ScaleNetwork net;
    net.kernel_size = ks;
    net.beta_k = model.scales.back().beta_k;
    for (size_t t = 0; t < model.scales.back().stages.size(); ++t) {
      StageShape sh = shape_of(model.scales.back().stages[t]);
      sh.in_channels = t == 0 ? 1 : 2;  // timing net runs cold
      net.stages.push_back(init_params(sh, rng));
    }

    Image probe(dim, dim, 0.0);
    for (auto& v : probe.data) v = rng.uniform();

    std::vector<double> runs;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      scale_forward(probe, nullptr, net);
      runs.push_back(std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count());
    }
    std::sort(runs.begin(), runs.end());
    cells.push_back({dim, ks, runs[runs.size() / 2]});
  }
  return cells;
}

std::string format_runtime_table(const std::vector<RuntimeCell>& cells) {
  std::string out = "image_size  kernel_size  median_ms\n";
  char line[64];
  for (const RuntimeCell& c : cells) {
    std::snprintf(line, sizeof(line), "%10d  %11d  %9.1f\n", c.image_dim,
                  c.kernel_size, c.median_ms);
    out += line;
  }
  return out;
}

std::string runtime_table_csv(const std::vector<RuntimeCell>& cells) {
  std::string out = "image_dim,kernel_size,median_ms\n";
  char line[64];
  for (const RuntimeCell& c : cells) {
    std::snprintf(line, sizeof(line), "%d,%d,%.3f\n", c.image_dim, c.kernel_size,
                  c.median_ms);
    out += line;
  }
  return out;
}

uint64_t fnv1a_hash(const std::string& text) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace deblur
