#include "deblur/training.hpp"

#include <algorithm>
#include <cmath>

#include "deblur/errors.hpp"
#include "deblur/geometry.hpp"

namespace deblur {

namespace {

constexpr double kLogBetaXMin = -18.420680743952367;  // ln 1e-8
constexpr double kLogBetaXMax = 6.907755278982137;    // ln 1e3

std::vector<double*> all_param_ptrs(ScaleNetwork& net) {
  std::vector<double*> ptrs;
  for (StageParams& st : net.stages) {
    auto p = param_ptrs(st);
    ptrs.insert(ptrs.end(), p.begin(), p.end());
  }
  return ptrs;
}

std::vector<double> flatten_grads(std::vector<StageGrads>& grads) {
  std::vector<double> flat;
  for (StageGrads& g : grads) {
    auto p = param_ptrs(g);
    for (double* v : p) flat.push_back(*v);
  }
  return flat;
}

// Keeps the quotient denominator regularizer in a numerically safe band.
void clamp_beta_x(ScaleNetwork& net) {
  for (StageParams& st : net.stages)
    st.log_beta_x = std::clamp(st.log_beta_x, kLogBetaXMin, kLogBetaXMax);
}

}  // namespace

std::pair<double, Image> kernel_l2_loss(const Image& predicted_raw,
                                        const BlurKernel& target) {
  const int ks = target.size;
  const Image crop = crop_center(predicted_raw, ks, ks);

  double loss = 0.0;
  Image delta_crop(ks, ks, 0.0);
  for (size_t i = 0; i < crop.data.size(); ++i) {
    const bool clamped = crop.data[i] < 0.0;
    const double r = (clamped ? 0.0 : crop.data[i]) - target.weights[i];
    loss += r * r;
    delta_crop.data[i] = clamped ? 0.0 : 2.0 * r;
  }
  return {loss, pad_or_embed(delta_crop, predicted_raw.width, predicted_raw.height)};
}

void adadelta_step(const std::vector<double*>& params, const std::vector<double>& grads,
                   OptimizerState& state, const OptimizerConfig& cfg,
                   const std::vector<uint8_t>* frozen) {
  if (params.size() != grads.size() || params.size() != state.grad_sq.size() ||
      params.size() != state.update_sq.size() ||
      (frozen && frozen->size() != params.size()))
    throw DimensionError("optimizer buffers disagree in size");

  const double rho = cfg.adadelta_decay, eps = cfg.adadelta_eps;
  for (size_t i = 0; i < params.size(); ++i) {
    if (frozen && (*frozen)[i]) continue;
    const double g = grads[i];
    state.grad_sq[i] = rho * state.grad_sq[i] + (1 - rho) * g * g;
    const double step = -cfg.adadelta_lr *
                        std::sqrt(state.update_sq[i] + eps) /
                        std::sqrt(state.grad_sq[i] + eps) * g;
    state.update_sq[i] = rho * state.update_sq[i] + (1 - rho) * step * step;
    *params[i] += step;
  }
}

void sgd_step(const std::vector<double*>& params, const std::vector<double>& grads,
              const OptimizerConfig& cfg, const std::vector<uint8_t>* frozen) {
  if (params.size() != grads.size() || (frozen && frozen->size() != params.size()))
    throw DimensionError("optimizer buffers disagree in size");
  for (size_t i = 0; i < params.size(); ++i) {
    if (frozen && (*frozen)[i]) continue;
    *params[i] -= cfg.sgd_lr * grads[i];
  }
}

bool should_skip(double loss, double running_mean, double skip_factor) {
  return loss > skip_factor * running_mean;
}

TrainExample to_example(const BlurSample& sample) {
  return {sample.blurry, sample.kernel, std::nullopt};
}

TrainingReport train_scale(MultiScaleModel& model, size_t scale_index,
                           const std::function<std::optional<TrainExample>()>& stream,
                           const TrainSchedule& schedule, const OptimizerConfig& opt,
                           Rng& rng, const TrainHooks& hooks) {
  if (scale_index >= model.scales.size())
    throw DimensionError("scale index out of range");
  if (schedule.steps <= 0 || schedule.steps_per_stage_add <= 0 ||
      schedule.max_stages <= 0 || schedule.running_loss_decay <= 0.0 ||
      schedule.running_loss_decay >= 1.0)
    throw ConfigError("train schedule values must be positive (decay in (0,1))");

  ScaleNetwork& net = model.scales[scale_index];
  if (net.stages.empty()) {
    StageShape shape;
    shape.in_channels = scale_index == 0 ? 1 : 2;
    net.stages.push_back(init_params(shape, rng));
  }

  std::vector<double*> ptrs = all_param_ptrs(net);
  OptimizerState state;
  state.resize(ptrs.size());

  TrainingReport report;
  double running = -1.0;
  int freeze_until = -1;
  size_t frozen_prefix = 0;

  for (int step = 0; step < schedule.steps; ++step) {
    if (step > 0 && step % schedule.steps_per_stage_add == 0 &&
        static_cast<int>(net.stages.size()) < schedule.max_stages) {
      frozen_prefix = ptrs.size();
      StageShape shape = shape_of(net.stages.back());
      shape.in_channels = 2;  // every appended stage reads blurry + latent
      net.stages.push_back(init_params(shape, rng));
      ptrs = all_param_ptrs(net);
      state.resize(ptrs.size());
      freeze_until = step + schedule.freeze_steps_after_add;
      report.stage_add_steps.push_back(step);
      if (hooks.checkpoint) hooks.checkpoint(model, step);
    }

    std::optional<TrainExample> ex = stream();
    if (!ex) {
      if (step == 0) throw ConfigError("training sample stream is empty");
      break;
    }
    if (ex->kernel.size != net.kernel_size)
      throw DimensionError("sample kernel size does not match the scale");

    const Image* warm = ex->warm_latent ? &*ex->warm_latent : nullptr;
    ScaleForwardResult fwd = scale_forward(ex->blurry, warm, net);
    auto [loss, delta_raw] = kernel_l2_loss(fwd.kernel_raw, ex->kernel);

    const bool skipped = running >= 0.0 &&
                         should_skip(loss, running, schedule.loss_skip_factor);
    if (skipped) {
      ++report.skipped_total;
    } else {
      ScaleBackResult back = scale_backward(net, fwd.tapes, delta_raw, nullptr);
      std::vector<double> grads = flatten_grads(back.grads);

      std::vector<uint8_t> frozen;
      const std::vector<uint8_t>* mask = nullptr;
      if (step < freeze_until && frozen_prefix > 0) {
        frozen.assign(ptrs.size(), 0);
        std::fill(frozen.begin(), frozen.begin() + frozen_prefix, 1);
        mask = &frozen;
      }
      if (opt.method == OptimizerConfig::Method::Adadelta)
        adadelta_step(ptrs, grads, state, opt, mask);
      else
        sgd_step(ptrs, grads, opt, mask);
      clamp_beta_x(net);

      running = running < 0.0
                    ? loss
                    : schedule.running_loss_decay * running +
                          (1 - schedule.running_loss_decay) * loss;
    }

    TrainStepRecord rec;
    rec.step = step;
    rec.loss = loss;
    rec.running_loss = std::max(running, 0.0);
    rec.skipped = skipped;
    rec.stage_count = static_cast<int>(net.stages.size());
    report.records.push_back(rec);
    if (hooks.on_record) hooks.on_record(rec);

    if (hooks.checkpoint && schedule.checkpoint_every > 0 &&
        (step + 1) % schedule.checkpoint_every == 0)
      hooks.checkpoint(model, step);
  }

  report.final_running_loss = std::max(running, 0.0);
  return report;
}

}  // namespace deblur
