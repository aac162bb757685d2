#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "deblur/blur_synth.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/rng.hpp"

namespace deblur {

struct OptimizerConfig {
  enum class Method { Adadelta, Sgd };
  Method method = Method::Adadelta;
  double adadelta_lr = 0.01;
  double adadelta_decay = 0.95;
  double adadelta_eps = 1e-6;
  double sgd_lr = 0.01;
};

// Decayed second moments of gradients and of the updates themselves, one slot
// per parameter, zero-initialized. Grows when stages are added mid-training.
struct OptimizerState {
  std::vector<double> grad_sq;
  std::vector<double> update_sq;

  void resize(size_t n) {
    grad_sq.resize(n, 0.0);
    update_sq.resize(n, 0.0);
  }
};

// Squared-error fit of the estimator's raw full-frame kernel against the
// ground-truth PSF, evaluated on the centered crop after the negativity
// clamp (no renormalization, so the gradient is a plain residual that is
// zeroed outside the crop and where the clamp was active).
std::pair<double, Image> kernel_l2_loss(const Image& predicted_raw,
                                        const BlurKernel& target);

// E[g²] ← ρE[g²]+(1−ρ)g²;  Δ = −lr·√(E[Δ²]+ε)/√(E[g²]+ε)·g;
// E[Δ²] ← ρE[Δ²]+(1−ρ)Δ²;  p += Δ.  A true frozen-mask entry leaves both the
// parameter and its accumulators untouched.
void adadelta_step(const std::vector<double*>& params, const std::vector<double>& grads,
                   OptimizerState& state, const OptimizerConfig& cfg,
                   const std::vector<uint8_t>* frozen = nullptr);

void sgd_step(const std::vector<double*>& params, const std::vector<double>& grads,
              const OptimizerConfig& cfg, const std::vector<uint8_t>* frozen = nullptr);

// The outlier rule: drop a sample's update iff its loss is strictly above
// skip_factor × the running mean.
bool should_skip(double loss, double running_mean, double skip_factor);

struct TrainSchedule {
  int steps = 2000;
  int steps_per_stage_add = 1000;     // stage appended whenever step hits a multiple
  int freeze_steps_after_add = 1000;  // earlier stages fixed for this window
  int max_stages = 3;
  double loss_skip_factor = 10.0;
  double running_loss_decay = 0.999;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
};

// One supervised step for a scale: the observation at that scale's
// resolution, the target PSF, and (for non-coarsest scales) the warm latent
// handed up from the coarser network.
struct TrainExample {
  Image blurry;
  BlurKernel kernel;
  std::optional<Image> warm_latent;
};

TrainExample to_example(const BlurSample& sample);

struct TrainStepRecord {
  int step = 0;
  double loss = 0.0;
  double running_loss = 0.0;
  bool skipped = false;
  int stage_count = 0;
};

struct TrainingReport {
  std::vector<TrainStepRecord> records;
  std::vector<int> stage_add_steps;
  int skipped_total = 0;
  double final_running_loss = 0.0;
};

struct TrainHooks {
  // Called after every step with the live model; wire JSONL progress here.
  std::function<void(const TrainStepRecord&)> on_record;
  // Called at checkpoint_every boundaries and right after a stage add.
  std::function<void(const MultiScaleModel&, int step)> checkpoint;
};

// Trains one scale of the cascade in place. The scale starts from its current
// stage stack (usually one stage); fresh stages are appended per the
// schedule, with earlier stages frozen for the configured window. The loss is
// taken on the last stage's raw kernel. rng only seeds newly added stages.
// A stream that is empty at the first step is a configuration error; one that
// runs dry later ends training early with the steps seen so far.
TrainingReport train_scale(MultiScaleModel& model, size_t scale_index,
                           const std::function<std::optional<TrainExample>()>& stream,
                           const TrainSchedule& schedule, const OptimizerConfig& opt,
                           Rng& rng, const TrainHooks& hooks = {});

}  // namespace deblur
