#include "deblur/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "deblur/geometry.hpp"
#include "deblur/resample.hpp"
#include "deblur/window.hpp"

namespace deblur {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

int taper_margin(int kernel_size) { return (kernel_size + 1) / 2; }

FeatureImages taper(const FeatureImages& feats, const Image& window) {
  FeatureImages out;
  for (const auto& im : feats.x_tilde) out.x_tilde.push_back(im * window);
  for (const auto& im : feats.y_tilde) out.y_tilde.push_back(im * window);
  return out;
}

}  // namespace

void validate_model(const MultiScaleModel& model) {
  if (model.scales.empty())
    throw ModelInvariantError("model has no scales");
  int prev_size = 0;
  for (size_t s = 0; s < model.scales.size(); ++s) {
    const ScaleNetwork& net = model.scales[s];
    if (net.kernel_size < 3 || net.kernel_size % 2 == 0)
      throw ModelInvariantError("kernel size must be odd and >= 3");
    if (net.kernel_size <= prev_size)
      throw ModelInvariantError("kernel sizes must be strictly increasing");
    prev_size = net.kernel_size;
    if (net.beta_k <= 0.0) throw ModelInvariantError("beta_k must be positive");
    if (net.stages.empty()) throw ModelInvariantError("scale has no stages");
    for (size_t t = 0; t < net.stages.size(); ++t) {
      const StageParams& st = net.stages[t];
      const int expect_channels = t == 0 ? (s == 0 ? 1 : 2) : 2;
      if (st.conv.in_channels != expect_channels &&
          !(t == 0 && st.conv.in_channels == 1))
        throw ModelInvariantError("stage channel count inconsistent with position");
      if (st.conv.filter_size % 2 == 0 || st.conv.filter_size < 1)
        throw ModelInvariantError("conv filter size must be odd");
      if (static_cast<int>(st.conv.weights.size()) !=
          st.conv.num_filters * st.conv.in_channels)
        throw ModelInvariantError("conv weight count mismatch");
      int width = st.conv.num_filters;
      for (const HiddenMix& m : st.hidden) {
        if (m.in != width || static_cast<size_t>(m.in) * m.out != m.w.size())
          throw ModelInvariantError("hidden mix dimensions do not chain");
        width = m.out;
      }
      if (st.out.hidden != width || st.out.pairs <= 0)
        throw ModelInvariantError("recombiner dimensions do not chain");
    }
  }
}

std::pair<int, int> scale_dims(const MultiScaleModel& model, size_t scale_index,
                               int width, int height, ScalePolicy policy) {
  const int ks = model.scales[scale_index].kernel_size;
  int w, h;
  if (policy == ScalePolicy::KernelRatio) {
    const double ratio =
        static_cast<double>(ks) / model.scales.back().kernel_size;
    w = static_cast<int>(std::lround(width * ratio));
    h = static_cast<int>(std::lround(height * ratio));
  } else {
    const int shift = static_cast<int>(model.scales.size() - 1 - scale_index);
    w = width >> shift;
    h = height >> shift;
  }
  return {std::min(width, std::max(w, ks)), std::min(height, std::max(h, ks))};
}

std::pair<BlurKernel, KernelPostTape> kernel_postprocess(const Image& raw,
                                                         int kernel_size) {
  if (kernel_size > raw.width || kernel_size > raw.height)
    throw DimensionError("kernel_postprocess: raw frame smaller than kernel");
  KernelPostTape tape;
  tape.frame_w = raw.width;
  tape.frame_h = raw.height;
  tape.kernel_size = kernel_size;

  const Image cropped = crop_center(raw, kernel_size, kernel_size);
  tape.clamped.resize(cropped.data.size());
  std::vector<double> clamped_vals(cropped.data.size());
  double mass = 0.0;
  for (size_t i = 0; i < cropped.data.size(); ++i) {
    tape.clamped[i] = cropped.data[i] < 0.0;
    clamped_vals[i] = tape.clamped[i] ? 0.0 : cropped.data[i];
    mass += clamped_vals[i];
  }
  tape.mass = mass;

  BlurKernel k(kernel_size);
  if (mass <= 1e-12) {
    tape.degenerate = true;
    k = identity_kernel(kernel_size);
  } else {
    for (size_t i = 0; i < clamped_vals.size(); ++i)
      k.weights[i] = clamped_vals[i] / mass;
  }
  tape.normalized = k.weights;
  return {std::move(k), std::move(tape)};
}

Image kernel_postprocess_backward(const KernelPostTape& tape,
                                  const std::vector<double>& delta_khat) {
  Image out(tape.frame_w, tape.frame_h, 0.0);
  if (tape.degenerate) return out;
  if (delta_khat.size() != tape.normalized.size())
    throw DimensionError("kernel_postprocess_backward: delta size mismatch");

  double proj = 0.0;  // ⟨δk̂, k̂⟩, the normalization cross term
  for (size_t i = 0; i < delta_khat.size(); ++i)
    proj += delta_khat[i] * tape.normalized[i];

  const int ox = (tape.frame_w - tape.kernel_size) / 2;
  const int oy = (tape.frame_h - tape.kernel_size) / 2;
  for (int y = 0; y < tape.kernel_size; ++y)
    for (int x = 0; x < tape.kernel_size; ++x) {
      const size_t i = static_cast<size_t>(y) * tape.kernel_size + x;
      if (tape.clamped[i]) continue;
      out.at(ox + x, oy + y) = (delta_khat[i] - proj) / tape.mass;
    }
  return out;
}

BlurKernel kernel_sharpen_gaussian(const BlurKernel& kernel, double sigma, double reg) {
  if (sigma <= 0.0) throw NumericError("kernel_sharpen_gaussian: sigma must be > 0");
  BlurKernel gauss(kernel.size);
  const double c = (kernel.size - 1) / 2.0;
  double mass = 0.0;
  for (int y = 0; y < kernel.size; ++y)
    for (int x = 0; x < kernel.size; ++x) {
      const double r2 = (x - c) * (x - c) + (y - c) * (y - c);
      gauss.at(x, y) = std::exp(-r2 / (2.0 * sigma * sigma));
      mass += gauss.at(x, y);
    }
  for (auto& v : gauss.weights) v /= mass;

  // The kernel plays the image role in the usual Tikhonov quotient.
  auto [sharp, tape] = image_estimate_forward(gauss, to_image(kernel), reg);
  return kernel_postprocess(sharp, kernel.size).first;
}

StageResult stage_forward(const Image& blurry, const Image* latent,
                          const StageParams& stage, double beta_k, int kernel_size) {
  if ((latent != nullptr) != (stage.conv.in_channels == 2))
    throw DimensionError("stage_forward: latent presence mismatches stage channels");
  std::vector<Image> inputs = {blurry};
  if (latent) {
    if (!latent->same_shape(blurry))
      throw DimensionError("stage_forward: latent/blurry shape mismatch");
    inputs.push_back(*latent);
  }

  StageResult res;
  auto [feats, ftape] = stage_features_forward(inputs, stage);
  res.tape.feat = std::move(ftape);
  res.tape.window =
      barthann_border_window(blurry.width, blurry.height, taper_margin(kernel_size));

  auto [kernel_raw, ktape] = kernel_estimate_forward(taper(feats, res.tape.window), beta_k);
  res.kernel_raw = std::move(kernel_raw);
  res.tape.kernel_tape = std::move(ktape);

  auto [khat, ptape] = kernel_postprocess(res.kernel_raw, kernel_size);
  res.kernel = std::move(khat);
  res.tape.post = std::move(ptape);
  res.degenerate = res.tape.post.degenerate;

  auto [latent_next, itape] =
      image_estimate_forward(res.kernel, blurry, std::exp(stage.log_beta_x));
  res.latent_next = std::move(latent_next);
  res.tape.image_tape = std::move(itape);
  return res;
}

StageBackResult stage_backward(const StageParams& stage, const StageTape& tape,
                               const Image* delta_kernel_raw,
                               const Image* delta_latent_next) {
  const int w = tape.window.width, h = tape.window.height;
  StageBackResult res;
  res.delta_blurry = Image(w, h, 0.0);
  res.grads = zero_grads_like(stage);

  Image delta_raw = delta_kernel_raw ? *delta_kernel_raw : Image(w, h, 0.0);
  if (delta_latent_next) {
    ImageEstimateGrads ig = image_estimate_backward(tape.image_tape, *delta_latent_next);
    accumulate(res.delta_blurry, ig.delta_y);
    // d/d(logβ) = β · d/dβ
    res.grads.log_beta_x = ig.delta_beta_x * tape.image_tape.beta;
    accumulate(delta_raw, kernel_postprocess_backward(tape.post, ig.delta_kernel.data));
  }

  KernelEstimateGrads kg = kernel_estimate_backward(tape.kernel_tape, delta_raw);
  res.delta_beta_k = kg.delta_beta_k;

  FeatureImages delta_feats;
  for (auto& im : kg.delta_x_tilde) delta_feats.x_tilde.push_back(im * tape.window);
  for (auto& im : kg.delta_y_tilde) delta_feats.y_tilde.push_back(im * tape.window);

  auto [delta_inputs, fgrads] = stage_features_backward(tape.feat, stage, delta_feats);
  const double beta_grad = res.grads.log_beta_x;
  res.grads = std::move(fgrads);
  res.grads.log_beta_x = beta_grad;

  accumulate(res.delta_blurry, delta_inputs[0]);
  if (delta_inputs.size() > 1) res.delta_latent = std::move(delta_inputs[1]);
  return res;
}

ScaleForwardResult scale_forward(const Image& blurry, const Image* warm_latent,
                                 const ScaleNetwork& net) {
  if (net.stages.empty()) throw DimensionError("scale_forward: no stages");
  ScaleForwardResult res;
  Image latent;
  const Image* latent_in = warm_latent;
  for (size_t s = 0; s < net.stages.size(); ++s) {
    StageResult sr =
        stage_forward(blurry, latent_in, net.stages[s], net.beta_k, net.kernel_size);
    res.tapes.push_back(std::move(sr.tape));
    res.kernel = std::move(sr.kernel);
    res.kernel_raw = std::move(sr.kernel_raw);
    res.degenerate = sr.degenerate;
    latent = std::move(sr.latent_next);
    latent_in = &latent;
  }
  res.latent = std::move(latent);
  return res;
}

ScaleBackResult scale_backward(const ScaleNetwork& net,
                               const std::vector<StageTape>& tapes,
                               const Image& delta_kernel_raw_last,
                               const Image* delta_latent_last) {
  const size_t n = net.stages.size();
  if (tapes.size() != n) throw DimensionError("scale_backward: tape count mismatch");

  ScaleBackResult res;
  res.grads.resize(n);
  Image delta_latent;  // gradient flowing into stage s's latent output
  const Image* dl = delta_latent_last;
  for (size_t s = n; s-- > 0;) {
    const Image* dk = s == n - 1 ? &delta_kernel_raw_last : nullptr;
    StageBackResult sb = stage_backward(net.stages[s], tapes[s], dk, dl);
    res.grads[s] = std::move(sb.grads);
    if (res.delta_blurry.width == 0)
      res.delta_blurry = std::move(sb.delta_blurry);
    else
      accumulate(res.delta_blurry, sb.delta_blurry);
    delta_latent = std::move(sb.delta_latent);
    dl = delta_latent.width > 0 ? &delta_latent : nullptr;
  }
  res.delta_warm_latent = std::move(delta_latent);
  return res;
}

DeblurResult multiscale_deblur(const Image& blurry, const MultiScaleModel& model,
                               const DeblurOptions& opts) {
  validate_model(model);
  const int finest = model.scales.back().kernel_size;
  if (blurry.width < finest || blurry.height < finest)
    throw DimensionError("multiscale_deblur: image smaller than the finest kernel");

  DeblurResult res;
  Image latent;
  for (size_t s = 0; s < model.scales.size(); ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [w, h] = scale_dims(model, s, blurry.width, blurry.height, opts.policy);
    const Image scaled_blurry =
        (w == blurry.width && h == blurry.height) ? blurry : resize_bilinear(blurry, w, h);

    const Image* warm = nullptr;
    Image warm_resized;
    const bool wants_warm = model.scales[s].stages[0].conv.in_channels == 2;
    if (s > 0 && wants_warm) {
      warm_resized = resize_bilinear(latent, w, h);
      warm = &warm_resized;
    } else if (s > 0 && !wants_warm) {
      res.warnings.push_back("scale ignores warm latent (single-channel first stage)");
    }

    ScaleForwardResult sf = scale_forward(scaled_blurry, warm, model.scales[s]);
    if (sf.degenerate) {
      res.degenerate = true;
      res.warnings.push_back("degenerate kernel estimate; identity fallback");
    }
    res.per_scale_kernels.push_back(sf.kernel);
    res.kernel = std::move(sf.kernel);
    latent = std::move(sf.latent);
    res.per_scale_ms.push_back(ms_since(t0));
  }

  if (opts.sharpen_at_kernel_size > 0 && finest >= opts.sharpen_at_kernel_size)
    res.kernel = kernel_sharpen_gaussian(res.kernel, opts.sharpen_sigma);

  const auto t0 = std::chrono::steady_clock::now();
  const double beta_x = std::exp(model.scales.back().stages.back().log_beta_x);
  res.latent = image_estimate_forward(res.kernel, blurry, beta_x).first;
  res.restore_ms = ms_since(t0);
  return res;
}

}  // namespace deblur
