#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "deblur/config.hpp"
#include "deblur/image.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/spatially_varying.hpp"

namespace deblur::cli {

// Command bodies; each returns the process exit status for the success path
// (threshold and gradcheck violations return 1 without throwing).
int run_synth(const RunConfig& cfg);
int run_train(const RunConfig& cfg);
int run_deblur(const RunConfig& cfg);
int run_gradcheck(const RunConfig& cfg);
int run_eval(const RunConfig& cfg);

// One JSON object per line on stderr; safe to call from worker threads.
void emit_event(const nlohmann::json& obj);

// Sorted .png/.pgm paths directly inside dir. Missing dir → IoError.
std::vector<std::string> list_images(const std::string& dir);

// Lossless PSF sidecars: {"size": n, "weights": [...]} at full precision.
void write_kernel_json(const std::string& path, const BlurKernel& kernel);
BlurKernel read_kernel_json(const std::string& path);

// The training cascade for a finest kernel size: 5 → 9 → 17 → ... (2k−1
// growth), capped by `finest` which always terminates the list.
std::vector<int> kernel_ladder(int finest);

ScalePolicy policy_from_string(const std::string& name);  // ConfigError

// Runs the cascade one scale at a time on policy-resized copies of the
// observation, upsampling each latent into the next scale's warm start.
// Unlike the one-call deblur entry point this keeps the finest scale's tapes,
// which the spatially-varying path mines for feature images.
ScaleForwardResult run_cascade(const Image& blurry, const MultiScaleModel& model,
                               ScalePolicy policy);

// PSF-per-patch contact sheet: nx × ny tiles, each normalized to its own
// peak, separated by 1px gutters.
Image kernel_mosaic(const LocalKernelField& field, const PatchGrid& grid);

}  // namespace deblur::cli
