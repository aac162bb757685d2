#pragma once

#include <array>
#include <string>
#include <vector>

#include "deblur/image.hpp"
#include "deblur/quotient.hpp"

namespace deblur {

// Overlapping square patches whose weight windows sum to exactly one at every
// pixel, so patch-wise results recombine without seams. Patches are laid out
// row-major (r = iy·nx + ix), first and last flush with the image edges.
struct PatchGrid {
  int width = 0, height = 0;
  int patch = 0;
  int nx = 0, ny = 0;
  std::vector<int> x0, y0;
  std::vector<Image> windows;  // patch-local partition-of-unity weights
  size_t count() const { return windows.size(); }
};

// Patch count per axis is ⌈(dim − overlap·patch) / ((1−overlap)·patch)⌉.
PatchGrid build_patch_grid(int width, int height, int patch_size, double overlap);

// Per-patch kernel estimates. `kernels` holds raw (signed) centered crops
// straight from the quotient until a projection/normalization step runs.
struct LocalKernelField {
  int kernel_size = 0;
  std::vector<Image> kernels;
  double eta = 1.0;
  bool degenerate = false;
};

// Windows and crops the feature pairs patch-by-patch and evaluates the kernel
// quotient at patch resolution. The locally-uniform assumption makes this
// approximate: windowing bleeds a few permille into each estimate.
LocalKernelField local_kernels_direct(const FeatureImages& feats, const PatchGrid& grid,
                                      double beta_k, int kernel_size);

// A rigid in-plane camera motion: translate by (dx, dy) pixels and rotate by
// theta radians about the image center.
struct Motion {
  double dx = 0.0, dy = 0.0, theta = 0.0;
};

struct MotionRanges {
  double max_translation = 0.0;  // ± pixels; 0 → kernel radius
  double translation_step = 1.0;
  double max_rotation = 2.0 * 3.14159265358979323846 / 180.0;  // ±2°
  double rotation_step = 0.25 * 3.14159265358979323846 / 180.0;
};

// Each motion renders, per patch, the displacement it induces at the patch
// center as a 4-tap bilinear splat in the local kernel frame. Columns
// (stacked over patches) are ℓ2-normalized so analysis and synthesis act as
// an orthogonal projection whenever the rendered columns don't overlap.
struct MotionBasis {
  int kernel_size = 0;
  size_t patches = 0;
  std::vector<Motion> motions;
  struct Tap {
    int index = 0;
    double weight = 0.0;
  };
  std::vector<std::vector<std::array<Tap, 4>>> taps;  // [motion][patch]
  std::vector<std::string> warnings;  // motions dropped for leaving the support
};

// Motions are the union of a translation grid (θ = 0) and a rotation sweep
// (zero shift); a motion whose displacement leaves the kernel support in any
// patch is excluded with a warning rather than clipped.
MotionBasis build_motion_basis(int width, int height, const PatchGrid& grid,
                               const MotionRanges& ranges, int kernel_size);

// μ_m = ⟨column m, field⟩ across all patches.
std::vector<double> analyze_field(const LocalKernelField& field, const MotionBasis& basis);

// field = Σ_m μ_m · column m. With normalize, every local kernel is clamped
// to the simplex; an all-zero coefficient vector degrades to identity kernels
// with the degenerate flag set.
LocalKernelField synthesize_field(const std::vector<double>& mu, const MotionBasis& basis,
                                  bool normalize);

// Keeps the ⌈eta·len⌉ largest |μ| entries (ties broken by lower index) and
// zeroes the rest.
void hard_threshold_top_fraction(std::vector<double>& mu, double eta);

// Analysis → hard threshold → synthesis: projects the direct per-patch
// estimates onto the span of plausible camera motions, sparsified to the top
// eta fraction of coefficients.
LocalKernelField project_and_threshold(const LocalKernelField& field,
                                       const MotionBasis& basis, double eta,
                                       bool normalize = true);

// Patch-wise Tikhonov deconvolution with the local kernels, blended back
// through the partition-of-unity windows (applied after deconvolution).
Image eff_restore(const Image& blurry, const LocalKernelField& field,
                  const PatchGrid& grid, double beta_x);

}  // namespace deblur
