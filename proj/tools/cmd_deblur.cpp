#include <cmath>
#include <filesystem>
#include <fstream>

#include "common.hpp"
#include "deblur/errors.hpp"
#include "deblur/feature_net.hpp"
#include "deblur/image_io.hpp"
#include "deblur/model_io.hpp"

namespace fs = std::filesystem;

namespace deblur::cli {

namespace {

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

Image normalized_for_display(const BlurKernel& kernel) {
  Image img = to_image(kernel);
  const double peak = max_abs(img);
  if (peak > 0.0)
    for (double& v : img.data) v = std::max(0.0, v) / peak;
  return img;
}

}  // namespace

int run_deblur(const RunConfig& cfg) {
  const auto& dc = cfg.deblur;
  if (dc.model.empty()) throw ConfigError("deblur requires a model (--model)");
  if (dc.input.empty()) throw ConfigError("deblur requires an input image");

  DeblurOptions opts;
  opts.policy = policy_from_string(dc.policy);  // reject bad config before touching files

  MultiScaleModel model = load_model(dc.model);
  Image blurry = read_image(dc.input);
  const int finest_ks = model.scales.back().kernel_size;
  if (blurry.width < finest_ks || blurry.height < finest_ks)
    throw DimensionError("input " + std::to_string(blurry.width) + "×" +
                         std::to_string(blurry.height) +
                         " is smaller than the finest kernel (" +
                         std::to_string(finest_ks) + ")");

  fs::create_directories(dc.out_dir);
  const std::string stem = fs::path(dc.input).stem().string();
  auto out_path = [&](const std::string& suffix) {
    return (fs::path(dc.out_dir) / (stem + suffix)).string();
  };

  DeblurResult res = multiscale_deblur(blurry, model, opts);

  nlohmann::json metrics = {
      {"input", dc.input},
      {"model", dc.model},
      {"kernel_size", finest_ks},
      {"per_scale_ms", res.per_scale_ms},
      {"restore_ms", res.restore_ms},
      {"degenerate", res.degenerate},
      {"warnings", res.warnings},
      {"spatially_varying", dc.spatially_varying},
  };

  Image latent = res.latent;
  if (dc.spatially_varying) {
    // Re-run the finest scale with tapes kept so the last stage's learned
    // features can be pulled back out for the per-patch quotients.
    ScaleForwardResult fine = run_cascade(blurry, model, opts.policy);
    const ScaleNetwork& net = model.scales.back();
    FeatureImages feats =
        stage_features_forward(fine.tapes.back().feat.inputs, net.stages.back())
            .first;

    const int patch = dc.patch_size > 0
                          ? dc.patch_size
                          : std::max(finest_ks,
                                     std::min(blurry.width, blurry.height) / 4);
    PatchGrid grid = build_patch_grid(blurry.width, blurry.height, patch,
                                      dc.patch_overlap);
    LocalKernelField field =
        local_kernels_direct(feats, grid, net.beta_k, finest_ks);

    MotionRanges ranges;
    ranges.max_translation = dc.max_translation;
    ranges.max_rotation = dc.max_rotation_deg * M_PI / 180.0;
    ranges.rotation_step = dc.rotation_step_deg * M_PI / 180.0;
    MotionBasis basis =
        build_motion_basis(blurry.width, blurry.height, grid, ranges, finest_ks);
    LocalKernelField projected = project_and_threshold(field, basis, dc.eta);

    const double beta_x = dc.beta_x > 0.0
                              ? dc.beta_x
                              : std::exp(net.stages.back().log_beta_x);
    latent = eff_restore(blurry, projected, grid, beta_x);

    write_png(out_path("_kernels.png"), kernel_mosaic(projected, grid));
    metrics["eta"] = dc.eta;
    metrics["patch_size"] = patch;
    metrics["patches"] = grid.count();
    metrics["motions"] = basis.motions.size();
    metrics["field_degenerate"] = projected.degenerate;
    for (const std::string& w : basis.warnings)
      metrics["warnings"].push_back(w);
  }

  write_png(out_path("_latent.png"), latent, 16);
  write_png(out_path("_kernel.png"), normalized_for_display(res.kernel));
  write_kernel_json(out_path("_kernel.json"), res.kernel);
  write_json(out_path("_metrics.json"), metrics);
  save_config(cfg, (fs::path(dc.out_dir) / "effective.ini").string());

  if (!cfg.run.quiet)
    emit_event({{"event", "deblur_done"},
                {"latent", out_path("_latent.png")},
                {"degenerate", res.degenerate},
                {"warnings", res.warnings.size()}});
  return 0;
}

}  // namespace deblur::cli
