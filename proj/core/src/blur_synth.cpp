#include "deblur/blur_synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "deblur/convolve.hpp"
#include "deblur/errors.hpp"

namespace deblur {

double matern_covariance(double delta, double length_scale, double signal_std) {
  const double r = std::sqrt(5.0) * std::abs(delta) / length_scale;
  return signal_std * signal_std * (1.0 + r + r * r / 3.0) * std::exp(-r);
}

namespace {

using Factor = std::shared_ptr<const Eigen::MatrixXd>;

// The factor only depends on (n, l, σ_f), which are fixed across a training
// run; cache it so each trajectory costs one matrix-vector product.
Factor cholesky_factor(const TrajectoryConfig& cfg) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, Factor> cache;

  const auto key = std::make_tuple(cfg.num_samples, cfg.length_scale, cfg.signal_std);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const int n = cfg.num_samples;
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double dt = (i - j) / static_cast<double>(n - 1);
      cov(i, j) = cov(j, i) = matern_covariance(dt, cfg.length_scale, cfg.signal_std);
    }

  for (double jitter = 1e-10; jitter <= 1e-2; jitter *= 10.0) {
    Eigen::MatrixXd attempt = cov;
    attempt.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(attempt);
    if (llt.info() == Eigen::Success) {
      auto factor = std::make_shared<Eigen::MatrixXd>(llt.matrixL());
      cache[key] = factor;
      return factor;
    }
  }
  throw NumericError("trajectory covariance is not positive definite even after jitter");
}

}  // namespace

std::vector<TrajectoryPoint> sample_trajectory(const TrajectoryConfig& cfg, Rng& rng) {
  if (cfg.length_scale <= 0.0 || cfg.signal_std <= 0.0)
    throw ConfigError("trajectory GP scales must be positive");
  if (cfg.num_samples < 2)
    throw ConfigError("a trajectory needs at least two time samples");

  const Factor L = cholesky_factor(cfg);
  const int n = cfg.num_samples;
  Eigen::VectorXd zx(n), zy(n);
  for (int i = 0; i < n; ++i) zx[i] = rng.normal();
  for (int i = 0; i < n; ++i) zy[i] = rng.normal();
  const Eigen::VectorXd fx = (*L) * zx;
  const Eigen::VectorXd fy = (*L) * zy;

  std::vector<TrajectoryPoint> path(n);
  for (int i = 0; i < n; ++i) path[i] = {fx[i], fy[i]};
  return path;
}

BlurKernel rasterize_kernel(const std::vector<TrajectoryPoint>& path, int kernel_size) {
  if (path.empty()) throw DimensionError("cannot rasterize an empty trajectory");
  BlurKernel kernel(kernel_size);
  const int c = (kernel_size - 1) / 2;

  // Equal-mass deposit sites: 4 sub-steps per segment plus the final point.
  std::vector<TrajectoryPoint> sites;
  constexpr int kSubSteps = 4;
  for (size_t i = 0; i + 1 < path.size(); ++i)
    for (int s = 0; s < kSubSteps; ++s) {
      const double t = s / static_cast<double>(kSubSteps);
      sites.push_back({path[i].x + t * (path[i + 1].x - path[i].x),
                       path[i].y + t * (path[i + 1].y - path[i].y)});
    }
  sites.push_back(path.back());

  double mx = 0.0, my = 0.0;
  for (const auto& p : sites) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(sites.size());
  my /= static_cast<double>(sites.size());

  double extent = 0.0;
  for (const auto& p : sites)
    extent = std::max({extent, std::abs(p.x - mx), std::abs(p.y - my)});
  if (extent < 1e-12 || c < 1) {
    kernel.at(c, c) = 1.0;
    return kernel;
  }

  const double scale = (c - 1.0) / extent;
  const double mass = 1.0 / static_cast<double>(sites.size());
  for (const auto& p : sites) {
    const double px = c + (p.x - mx) * scale;
    const double py = c + (p.y - my) * scale;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    kernel.at(x0, y0) += mass * (1 - fx) * (1 - fy);
    kernel.at(x0 + 1, y0) += mass * fx * (1 - fy);
    kernel.at(x0, y0 + 1) += mass * (1 - fx) * fy;
    kernel.at(x0 + 1, y0 + 1) += mass * fx * fy;
  }

  double sum = 0.0;
  for (double w : kernel.weights) sum += w;
  for (double& w : kernel.weights) w /= sum;
  return kernel;
}

bool reject_flat(const Image& sharp) {
  if (sharp.width < 2 || sharp.height < 2) return true;
  const int w = sharp.width - 1, h = sharp.height - 1;
  int busy = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = sharp.at(x + 1, y) - sharp.at(x, y);
      const double gy = sharp.at(x, y + 1) - sharp.at(x, y);
      if (std::abs(gx) >= 0.05 && std::abs(gy) >= 0.05) ++busy;
    }
  return busy < 0.06 * w * h;
}

BlurSample make_sample(const Image& sharp_source, const BlurKernel& kernel,
                       double noise_sigma, Rng& rng, int crop_size) {
  if (sharp_source.width < crop_size || sharp_source.height < crop_size)
    throw DimensionError("sharp source smaller than the requested crop");

  BlurSample sample;
  sample.noise_sigma = noise_sigma;
  sample.kernel = kernel;

  if (sharp_source.width == crop_size && sharp_source.height == crop_size) {
    sample.sharp = sharp_source;
  } else {
    const int x0 = rng.integer(sharp_source.width - crop_size + 1);
    const int y0 = rng.integer(sharp_source.height - crop_size + 1);
    sample.sharp = Image(crop_size, crop_size, 0.0);
    for (int y = 0; y < crop_size; ++y)
      for (int x = 0; x < crop_size; ++x)
        sample.sharp.at(x, y) = sharp_source.at(x0 + x, y0 + y);
  }

  sample.blurry = convolve_circular(sample.sharp, kernel);
  if (noise_sigma > 0.0)
    for (double& v : sample.blurry.data) v += noise_sigma * rng.normal();
  return sample;
}

Image synth_texture(int width, int height, Rng& rng) {
  if (width < 1 || height < 1) throw DimensionError("texture dimensions must be positive");
  Image img(width, height, 0.0);

  for (int k = 0; k < 6; ++k) {
    const double fx = rng.uniform(1.0, 8.0) * 2.0 * M_PI / width;
    const double fy = rng.uniform(1.0, 8.0) * 2.0 * M_PI / height;
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double amp = rng.uniform(0.2, 1.0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.at(x, y) += amp * std::sin(fx * x + fy * y + phase);
  }

  // Soft-edged rectangles add the step content the sinusoids lack.
  for (int k = 0; k < 8; ++k) {
    const int bw = 1 + rng.integer(std::max(1, width / 2));
    const int bh = 1 + rng.integer(std::max(1, height / 2));
    const int x0 = rng.integer(std::max(1, width - bw + 1));
    const int y0 = rng.integer(std::max(1, height - bh + 1));
    const double amp = rng.uniform(-1.5, 1.5);
    for (int y = y0; y < std::min(height, y0 + bh); ++y)
      for (int x = x0; x < std::min(width, x0 + bw); ++x) img.at(x, y) += amp;
  }

  double lo = img.data[0], hi = img.data[0];
  for (double v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  if (span < 1e-12) return Image(width, height, 0.5);
  for (double& v : img.data) v = (v - lo) / span;
  return img;
}

}  // namespace deblur
