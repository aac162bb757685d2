#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "deblur/image.hpp"
#include "deblur/pipeline.hpp"

namespace deblur {

// Mean squared kernel difference on a shared centered frame. Blind estimates
// carry an inherent shift ambiguity (a kernel shift trades against an image
// shift), so the estimate is aligned to the truth by rounding the
// center-of-mass offset to whole pixels first.
double kernel_mse(const BlurKernel& estimated, const BlurKernel& truth);

// 10·log10(1/MSE) for images in [0,1]; identical inputs give +infinity.
double psnr(const Image& a, const Image& b);

// Same metric with a border frame excluded — boundary pixels are dominated
// by the circular-convolution model mismatch, not by restoration quality.
double psnr_interior(const Image& a, const Image& b, int border);

struct RuntimeCell {
  int image_dim = 0;
  int kernel_size = 0;
  double median_ms = 0.0;
};

// Wall-times kernel estimation over an (image size × kernel size) grid.
// Weights don't affect arithmetic cost, so each cell runs a fresh network
// with the model's finest-scale stage shapes re-initialized at the cell's
// kernel size, on a random image; cells report the median of `reps` runs.
std::vector<RuntimeCell> runtime_table(const MultiScaleModel& model,
                                       const std::vector<std::pair<int, int>>& sizes,
                                       int reps = 3);

std::string format_runtime_table(const std::vector<RuntimeCell>& cells);
std::string runtime_table_csv(const std::vector<RuntimeCell>& cells);

// FNV-1a; stamps eval records with the hash of the producing configuration.
uint64_t fnv1a_hash(const std::string& text);

// One evaluated sample, serializable as a JSONL row / CSV record.
struct EvalRecord {
  std::string sample_id;
  double kernel_mse = 0.0;
  double psnr_db = 0.0;
  double estimate_ms = 0.0;
  double restore_ms = 0.0;
  std::string model_id;
  std::string config_hash;
};

}  // namespace deblur
