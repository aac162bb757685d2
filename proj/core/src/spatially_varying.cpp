#include "deblur/spatially_varying.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deblur/errors.hpp"
#include "deblur/geometry.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/window.hpp"

namespace deblur {

namespace {

int axis_count(int dim, int patch, double overlap) {
  const double numer = dim - overlap * patch;
  const double denom = (1.0 - overlap) * patch;
  return std::max(1, static_cast<int>(std::ceil(numer / denom - 1e-12)));
}

std::vector<int> axis_positions(int dim, int patch, int n) {
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i)
    pos[i] = n == 1 ? (dim - patch) / 2
                    : static_cast<int>(std::lround(
                          i * (dim - patch) / static_cast<double>(n - 1)));
  return pos;
}

Image crop_rect(const Image& img, int x0, int y0, int size) {
  Image out(size, size, 0.0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
  return out;
}

}  // namespace

PatchGrid build_patch_grid(int width, int height, int patch_size, double overlap) {
  if (patch_size < 2 || patch_size > std::min(width, height))
    throw DimensionError("patch size must fit inside the image");
  if (overlap < 0.0 || overlap > 0.9)
    throw DimensionError("patch overlap must lie in [0, 0.9]");

  PatchGrid grid;
  grid.width = width;
  grid.height = height;
  grid.patch = patch_size;
  grid.nx = axis_count(width, patch_size, overlap);
  grid.ny = axis_count(height, patch_size, overlap);

  const std::vector<int> xs = axis_positions(width, patch_size, grid.nx);
  const std::vector<int> ys = axis_positions(height, patch_size, grid.ny);

  // Half-pixel-sampled Barthann bumps are strictly positive, so the summed
  // weight is nonzero wherever any patch reaches and the normalized windows
  // form an exact partition of unity.
  const std::vector<double> bump = barthann_bump_open(patch_size);
  Image total(width, height, 0.0);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      grid.x0.push_back(xs[ix]);
      grid.y0.push_back(ys[iy]);
      for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
          total.at(xs[ix] + x, ys[iy] + y) += bump[x] * bump[y];
    }

  for (size_t r = 0; r < grid.x0.size(); ++r) {
    Image w(patch_size, patch_size, 0.0);
    for (int y = 0; y < patch_size; ++y)
      for (int x = 0; x < patch_size; ++x)
        w.at(x, y) = bump[x] * bump[y] / total.at(grid.x0[r] + x, grid.y0[r] + y);
    grid.windows.push_back(std::move(w));
  }
  return grid;
}

LocalKernelField local_kernels_direct(const FeatureImages& feats, const PatchGrid& grid,
                                      double beta_k, int kernel_size) {
  if (feats.count() == 0) throw DimensionError("no feature pairs");
  for (const Image& im : feats.x_tilde)
    if (im.width != grid.width || im.height != grid.height)
      throw DimensionError("feature images do not match the patch grid");
  if (kernel_size > grid.patch)
    throw DimensionError("kernel larger than the patch");

  LocalKernelField field;
  field.kernel_size = kernel_size;
  for (size_t r = 0; r < grid.count(); ++r) {
    FeatureImages local;
    for (size_t i = 0; i < feats.count(); ++i) {
      local.x_tilde.push_back(
          crop_rect(feats.x_tilde[i], grid.x0[r], grid.y0[r], grid.patch) *
          grid.windows[r]);
      local.y_tilde.push_back(
          crop_rect(feats.y_tilde[i], grid.x0[r], grid.y0[r], grid.patch) *
          grid.windows[r]);
    }
    const Image raw = kernel_estimate_forward(local, beta_k).first;
    field.kernels.push_back(crop_center(raw, kernel_size, kernel_size));
  }
  return field;
}

MotionBasis build_motion_basis(int width, int height, const PatchGrid& grid,
                               const MotionRanges& ranges, int kernel_size) {
  const int radius = (kernel_size - 1) / 2;
  const double max_t =
      ranges.max_translation > 0.0 ? ranges.max_translation : radius;

  std::vector<Motion> candidates;
  for (double dy = -max_t; dy <= max_t + 1e-9; dy += ranges.translation_step)
    for (double dx = -max_t; dx <= max_t + 1e-9; dx += ranges.translation_step)
      candidates.push_back({dx, dy, 0.0});
  for (double th = -ranges.max_rotation; th <= ranges.max_rotation + 1e-12;
       th += ranges.rotation_step)
    if (std::abs(th) > 1e-12) candidates.push_back({0.0, 0.0, th});

  MotionBasis basis;
  basis.kernel_size = kernel_size;
  basis.patches = grid.count();
  const double icx = (width - 1) / 2.0, icy = (height - 1) / 2.0;
  const int c = (kernel_size - 1) / 2;

  for (const Motion& m : candidates) {
    std::vector<std::array<MotionBasis::Tap, 4>> column(grid.count());
    bool inside = true;
    double norm_sq = 0.0;
    for (size_t r = 0; r < grid.count() && inside; ++r) {
      const double cx = grid.x0[r] + (grid.patch - 1) / 2.0;
      const double cy = grid.y0[r] + (grid.patch - 1) / 2.0;
      const double rx = cx - icx, ry = cy - icy;
      const double dx =
          std::cos(m.theta) * rx - std::sin(m.theta) * ry + icx + m.dx - cx;
      const double dy =
          std::sin(m.theta) * rx + std::cos(m.theta) * ry + icy + m.dy - cy;

      const double px = c + dx, py = c + dy;
      const int x0 = static_cast<int>(std::floor(px));
      const int y0 = static_cast<int>(std::floor(py));
      if (x0 < 0 || y0 < 0 || x0 + 1 >= kernel_size || y0 + 1 >= kernel_size) {
        inside = false;
        break;
      }
      const double fx = px - x0, fy = py - y0;
      const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                           fx * fy};
      const int idx[4] = {y0 * kernel_size + x0, y0 * kernel_size + x0 + 1,
                          (y0 + 1) * kernel_size + x0,
                          (y0 + 1) * kernel_size + x0 + 1};
      for (int t = 0; t < 4; ++t) {
        column[r][t] = {idx[t], w[t]};
        norm_sq += w[t] * w[t];
      }
    }

    if (!inside) {
      char msg[96];
      std::snprintf(msg, sizeof(msg),
                    "motion (%.2f, %.2f, %.4f rad) leaves the kernel support",
                    m.dx, m.dy, m.theta);
      basis.warnings.push_back(msg);
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& taps : column)
      for (auto& tap : taps) tap.weight *= inv;
    basis.motions.push_back(m);
    basis.taps.push_back(std::move(column));
  }
  if (basis.motions.empty())
    throw DimensionError("every candidate motion left the kernel support");
  return basis;
}

std::vector<double> analyze_field(const LocalKernelField& field,
                                  const MotionBasis& basis) {
  if (field.kernels.size() != basis.patches ||
      field.kernel_size != basis.kernel_size)
    throw DimensionError("kernel field does not match the motion basis");

  std::vector<double> mu(basis.motions.size(), 0.0);
  for (size_t m = 0; m < basis.motions.size(); ++m)
    for (size_t r = 0; r < basis.patches; ++r)
      for (const auto& tap : basis.taps[m][r])
        mu[m] += tap.weight * field.kernels[r].data[tap.index];
  return mu;
}

LocalKernelField synthesize_field(const std::vector<double>& mu,
                                  const MotionBasis& basis, bool normalize) {
  if (mu.size() != basis.motions.size())
    throw DimensionError("coefficient count does not match the motion basis");

  LocalKernelField field;
  field.kernel_size = basis.kernel_size;
  field.kernels.assign(basis.patches,
                       Image(basis.kernel_size, basis.kernel_size, 0.0));
  for (size_t m = 0; m < mu.size(); ++m) {
    if (mu[m] == 0.0) continue;
    for (size_t r = 0; r < basis.patches; ++r)
      for (const auto& tap : basis.taps[m][r])
        field.kernels[r].data[tap.index] += mu[m] * tap.weight;
  }

  field.degenerate =
      std::all_of(mu.begin(), mu.end(), [](double v) { return v == 0.0; });
  if (normalize)
    for (Image& k : field.kernels) {
      auto [khat, tape] = kernel_postprocess(k, basis.kernel_size);
      k = to_image(khat);
      field.degenerate = field.degenerate || tape.degenerate;
    }
  return field;
}

void hard_threshold_top_fraction(std::vector<double>& mu, double eta) {
  if (eta <= 0.0 || eta > 1.0)
    throw ConfigError("threshold fraction must lie in (0, 1]");
  const size_t keep = static_cast<size_t>(
      std::ceil(eta * static_cast<double>(mu.size()) - 1e-12));
  if (keep >= mu.size()) return;

  std::vector<size_t> order(mu.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::abs(mu[a]) > std::abs(mu[b]);
  });
  std::vector<double> kept(mu.size(), 0.0);
  for (size_t i = 0; i < keep; ++i) kept[order[i]] = mu[order[i]];
  mu = std::move(kept);
}

LocalKernelField project_and_threshold(const LocalKernelField& field,
                                       const MotionBasis& basis, double eta,
                                       bool normalize) {
  std::vector<double> mu = analyze_field(field, basis);
  hard_threshold_top_fraction(mu, eta);
  LocalKernelField out = synthesize_field(mu, basis, normalize);
  out.eta = eta;
  return out;
}

Image eff_restore(const Image& blurry, const LocalKernelField& field,
                  const PatchGrid& grid, double beta_x) {
  if (blurry.width != grid.width || blurry.height != grid.height)
    throw DimensionError("image does not match the patch grid");
  if (field.kernels.size() != grid.count())
    throw DimensionError("kernel field does not match the patch grid");

  Image out(grid.width, grid.height, 0.0);
  for (size_t r = 0; r < grid.count(); ++r) {
    const BlurKernel local =
        kernel_postprocess(field.kernels[r], field.kernel_size).first;
    const Image patch = crop_rect(blurry, grid.x0[r], grid.y0[r], grid.patch);
    const Image latent = image_estimate_forward(local, patch, beta_x).first;
    for (int y = 0; y < grid.patch; ++y)
      for (int x = 0; x < grid.patch; ++x)
        out.at(grid.x0[r] + x, grid.y0[r] + y) +=
            latent.at(x, y) * grid.windows[r].at(x, y);
  }
  return out;
}

}  // namespace deblur
