#include <fstream>

#include "common.hpp"
#include "deblur/blur_synth.hpp"
#include "deblur/convolve.hpp"
#include "deblur/errors.hpp"
#include "deblur/image_io.hpp"
#include "deblur/model_io.hpp"
#include "deblur/resample.hpp"
#include "deblur/rng.hpp"
#include "deblur/training.hpp"

namespace deblur::cli {

namespace {

Image crop_window(const Image& src, int x0, int y0, int size) {
  Image out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.at(x, y) = src.at(x0 + x, y0 + y);
  return out;
}

}  // namespace

int run_train(const RunConfig& cfg) {
  const auto& tc = cfg.train;
  if (tc.steps <= 0) throw ConfigError("train steps must be positive");
  if (tc.stages <= 0) throw ConfigError("stages per scale must be positive");

  MultiScaleModel model;
  if (!tc.resume.empty()) {
    model = load_model(tc.resume);  // checkpoint weights; schedule restarts
  } else {
    int prev = 0;
    for (int ks : tc.kernel_sizes) {
      if (ks < 3 || ks % 2 == 0 || ks <= prev)
        throw ConfigError("kernel_sizes must be odd and strictly increasing");
      prev = ks;
      ScaleNetwork net;
      net.kernel_size = ks;
      net.beta_k = tc.beta_k;
      model.scales.push_back(std::move(net));
    }
    if (model.scales.empty()) throw ConfigError("kernel_sizes is empty");
  }

  // Sharp sources: a corpus directory when given, otherwise the built-in
  // procedural textures (always accepted by the flatness filter).
  std::vector<Image> sources;
  if (!tc.corpus.empty()) {
    for (const std::string& p : list_images(tc.corpus)) {
      Image img = read_image(p);
      if (img.width >= tc.crop && img.height >= tc.crop)
        sources.push_back(std::move(img));
    }
    if (sources.empty())
      throw ConfigError("no corpus image is at least " + std::to_string(tc.crop) +
                        "×" + std::to_string(tc.crop));
  }

  std::ofstream report(tc.report, std::ios::binary);
  if (!report) throw IoError("cannot write report '" + tc.report + "'");

  Rng data_rng(tc.seed);
  Rng stage_rng(tc.seed + 0x517cc1b727220a95ull);  // decoupled init stream
  TrajectoryConfig traj;  // synthesis defaults; the [synth] section only
                          // shapes standalone datasets, not on-the-fly draws

  TrainSchedule sched;
  sched.steps = tc.steps;
  sched.steps_per_stage_add = tc.steps_per_stage_add;
  sched.freeze_steps_after_add = tc.freeze_steps;
  sched.max_stages = tc.stages;
  sched.loss_skip_factor = tc.loss_skip_factor;
  sched.checkpoint_every = tc.checkpoint_every;

  OptimizerConfig opt;
  opt.adadelta_lr = tc.lr;
  opt.adadelta_decay = tc.rho;
  opt.adadelta_eps = tc.eps;

  // Scales train sequentially coarse→fine; finer scales consume warm latents
  // produced by the already-trained coarser networks, exactly as inference
  // will hand them over.
#pragma GCC diagnostic push
// GCC cannot track the engagement flag of the returned optional through RVO
// and flags the (legitimately uninitialized) disengaged payload.
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
  for (size_t s = 0; s < model.scales.size(); ++s) {
    auto stream = [&, s]() -> std::optional<TrainExample> {
      for (int attempt = 0; attempt < 100; ++attempt) {
        Image sharp_full;
        if (sources.empty()) {
          sharp_full = synth_texture(tc.crop, tc.crop, data_rng);
        } else {
          const Image& src = sources[data_rng.integer(sources.size())];
          const int x0 = src.width == tc.crop
                             ? 0
                             : static_cast<int>(data_rng.integer(src.width - tc.crop + 1));
          const int y0 = src.height == tc.crop
                             ? 0
                             : static_cast<int>(data_rng.integer(src.height - tc.crop + 1));
          sharp_full = crop_window(src, x0, y0, tc.crop);
        }
        if (reject_flat(sharp_full)) continue;

        // One trajectory serves every scale: rasterizing it at each scale's
        // kernel size keeps the per-scale blurs geometrically consistent.
        const auto path = sample_trajectory(traj, data_rng);
        std::optional<Image> warm;
        for (size_t t = 0; t <= s; ++t) {
          auto [w, h] =
              scale_dims(model, t, tc.crop, tc.crop, ScalePolicy::KernelRatio);
          BlurKernel kt = rasterize_kernel(path, model.scales[t].kernel_size);
          Image sharp_t = (w == tc.crop && h == tc.crop)
                              ? sharp_full
                              : resize_bilinear(sharp_full, w, h);
          Image blurry_t = convolve_circular(sharp_t, kt);
          if (tc.noise_sigma > 0.0)
            for (double& v : blurry_t.data) v += tc.noise_sigma * data_rng.normal();

          if (t == s) {
            TrainExample ex;
            ex.blurry = std::move(blurry_t);
            ex.kernel = std::move(kt);
            if (warm) ex.warm_latent.emplace(std::move(*warm));
            return ex;
          }
          ScaleForwardResult r =
              scale_forward(blurry_t, warm ? &*warm : nullptr, model.scales[t]);
          auto [nw, nh] =
              scale_dims(model, t + 1, tc.crop, tc.crop, ScalePolicy::KernelRatio);
          warm = resize_bilinear(r.latent, nw, nh);
        }
      }
      return std::nullopt;
    };

    TrainHooks hooks;
    hooks.on_record = [&](const TrainStepRecord& r) {
      report << nlohmann::json({{"scale", s},
                                {"step", r.step},
                                {"loss", r.loss},
                                {"running_loss", r.running_loss},
                                {"skipped", r.skipped},
                                {"stage_count", r.stage_count}})
                    .dump()
             << "\n";
      if (!cfg.run.quiet && cfg.run.progress_every > 0 &&
          r.step % cfg.run.progress_every == 0)
        emit_event({{"event", "progress"},
                    {"phase", "train"},
                    {"scale", s},
                    {"step", r.step},
                    {"loss", r.loss},
                    {"running_loss", r.running_loss},
                    {"stage_count", r.stage_count}});
    };
    hooks.checkpoint = [&](const MultiScaleModel& m, int step) {
      save_model(m, tc.out_model);
      if (!cfg.run.quiet)
        emit_event({{"event", "checkpoint"},
                    {"scale", s},
                    {"step", step},
                    {"model", tc.out_model}});
    };

    TrainingReport tr = train_scale(model, s, stream, sched, opt, stage_rng, hooks);
    report << nlohmann::json({{"event", "scale_done"},
                              {"scale", s},
                              {"final_running_loss", tr.final_running_loss},
                              {"stage_adds", tr.stage_add_steps},
                              {"skipped_total", tr.skipped_total}})
                  .dump()
           << "\n";
    report.flush();
    if (!cfg.run.quiet)
      emit_event({{"event", "scale_done"},
                  {"scale", s},
                  {"final_running_loss", tr.final_running_loss},
                  {"skipped_total", tr.skipped_total}});
  }
#pragma GCC diagnostic pop

  save_model(model, tc.out_model);
  save_config(cfg, tc.out_model + ".effective.ini");
  if (!cfg.run.quiet)
    emit_event({{"event", "train_done"},
                {"model", tc.out_model},
                {"report", tc.report}});
  return 0;
}

}  // namespace deblur::cli
