#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deblur/feature_net.hpp"
#include "deblur/image.hpp"
#include "deblur/quotient.hpp"

namespace deblur {

// One resolution level: an ordered stack of stages sharing a kernel size.
// Stage 1 reads one channel (the blurry image) unless a coarser scale feeds
// a warm latent; later stages read blurry + latent.
struct ScaleNetwork {
  std::vector<StageParams> stages;
  int kernel_size = 0;
  double beta_k = 1e-4;
};

// Coarse-to-fine cascade with strictly increasing odd kernel sizes.
struct MultiScaleModel {
  std::vector<ScaleNetwork> scales;
  int format_version = 1;
};

// How full-resolution dimensions map to each scale. KernelRatio sizes scale s
// by kernel_size(s) / kernel_size(finest); FactorTwo halves per level.
enum class ScalePolicy { KernelRatio, FactorTwo };

void validate_model(const MultiScaleModel& model);  // throws ModelInvariantError
std::pair<int, int> scale_dims(const MultiScaleModel& model, size_t scale_index,
                               int width, int height, ScalePolicy policy);

// ---- kernel post-processing ----

struct KernelPostTape {
  int frame_w = 0, frame_h = 0;
  int kernel_size = 0;
  std::vector<uint8_t> clamped;   // which support entries the clamp zeroed
  std::vector<double> normalized;  // k̂ after renormalization
  double mass = 0.0;               // clamped sum before renormalization
  bool degenerate = false;
};

// Crop the centered kernel_size² region, clamp negatives to zero, renormalize
// to sum 1. A wiped-out kernel (mass ≤ 1e-12) degrades to the identity kernel
// with the degenerate flag set.
std::pair<BlurKernel, KernelPostTape> kernel_postprocess(const Image& raw,
                                                         int kernel_size);

// Exact adjoint of crop → clamp → renormalize as a full-frame image gradient:
// zero outside the crop, zero where the clamp was active, and the
// normalization Jacobian (δ_j - ⟨δ, k̂⟩) / mass inside. Degenerate kernels
// pass no gradient.
Image kernel_postprocess_backward(const KernelPostTape& tape,
                                  const std::vector<double>& delta_khat);

// Tikhonov-deconvolve the kernel by a Gaussian PSF of width sigma (counters
// estimator over-smoothing), then post-process back onto the simplex.
BlurKernel kernel_sharpen_gaussian(const BlurKernel& kernel, double sigma,
                                   double reg = 1e-3);

// ---- stage and scale composition ----

struct StageTape {
  StageFeatureTape feat;
  Image window;
  QuotientTape kernel_tape;
  KernelPostTape post;
  QuotientTape image_tape;
};

struct StageResult {
  Image kernel_raw;    // full-frame estimate, pre-postprocess (the loss target)
  BlurKernel kernel;   // post-processed PSF
  Image latent_next;
  bool degenerate = false;
  StageTape tape;
};

// Feature extraction → border taper → kernel quotient → post-process →
// image quotient. `latent` must be present iff the stage's conv reads two
// channels.
StageResult stage_forward(const Image& blurry, const Image* latent,
                          const StageParams& stage, double beta_k, int kernel_size);

struct StageBackResult {
  Image delta_blurry;
  Image delta_latent;  // empty (width 0) for single-channel stages
  StageGrads grads;
  double delta_beta_k = 0.0;
};

// delta_kernel_raw and/or delta_latent_next may be null when no gradient
// arrives on that output.
StageBackResult stage_backward(const StageParams& stage, const StageTape& tape,
                               const Image* delta_kernel_raw,
                               const Image* delta_latent_next);

struct ScaleForwardResult {
  BlurKernel kernel;
  Image kernel_raw;  // final stage's raw estimate
  Image latent;
  bool degenerate = false;
  std::vector<StageTape> tapes;
};

ScaleForwardResult scale_forward(const Image& blurry, const Image* warm_latent,
                                 const ScaleNetwork& net);

struct ScaleBackResult {
  Image delta_blurry;
  Image delta_warm_latent;  // empty when the scale had no warm input
  std::vector<StageGrads> grads;
};

// Backprop from a gradient on the last stage's raw kernel (and optionally on
// the final latent) through the whole stage chain.
ScaleBackResult scale_backward(const ScaleNetwork& net,
                               const std::vector<StageTape>& tapes,
                               const Image& delta_kernel_raw_last,
                               const Image* delta_latent_last);

// ---- full cascade ----

struct DeblurResult {
  BlurKernel kernel;
  Image latent;
  std::vector<BlurKernel> per_scale_kernels;
  std::vector<double> per_scale_ms;
  double restore_ms = 0.0;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

struct DeblurOptions {
  ScalePolicy policy = ScalePolicy::KernelRatio;
  // Deconvolve the finest kernel by a σ=0.5 Gaussian when its size reaches
  // this threshold; 0 disables.
  int sharpen_at_kernel_size = 33;
  double sharpen_sigma = 0.5;
};

// Coarse→fine: estimate at each scale, upsample the latent into the next
// scale's warm start, then restore the full-resolution image with the finest
// kernel via the image quotient.
DeblurResult multiscale_deblur(const Image& blurry, const MultiScaleModel& model,
                               const DeblurOptions& opts = {});

}  // namespace deblur
