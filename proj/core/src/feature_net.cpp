#include "deblur/feature_net.hpp"

#include <cmath>

#include "deblur/convolve.hpp"

namespace deblur {

namespace {

Image tanh_image(const Image& z) {
  Image out(z.width, z.height);
  for (size_t i = 0; i < z.data.size(); ++i) out.data[i] = std::tanh(z.data[i]);
  return out;
}

// δz = δa ⊙ (1 - a²), with a = tanh(z) taken from the tape.
Image tanh_backward(const Image& delta_act, const Image& act) {
  Image out(act.width, act.height);
  for (size_t i = 0; i < act.data.size(); ++i)
    out.data[i] = delta_act.data[i] * (1.0 - act.data[i] * act.data[i]);
  return out;
}

std::vector<Image> mix_forward(const std::vector<Image>& in, const HiddenMix& m) {
  if (static_cast<int>(in.size()) != m.in)
    throw DimensionError("hidden mix: input count mismatch");
  std::vector<Image> out;
  out.reserve(m.out);
  for (int k = 0; k < m.out; ++k) {
    Image acc(in[0].width, in[0].height, 0.0);
    for (int j = 0; j < m.in; ++j) {
      const double w = m.w[static_cast<size_t>(k) * m.in + j];
      for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += w * in[j].data[i];
    }
    out.push_back(tanh_image(acc));
  }
  return out;
}

}  // namespace

std::vector<Image> conv_forward(const std::vector<Image>& inputs, const ConvBank& bank) {
  if (static_cast<int>(inputs.size()) != bank.in_channels)
    throw DimensionError("conv_forward: channel count mismatch");
  std::vector<Image> out;
  out.reserve(bank.num_filters);
  for (int f = 0; f < bank.num_filters; ++f) {
    Image acc(inputs[0].width, inputs[0].height,
              bank.use_bias ? bank.bias[f] : 0.0);
    for (int c = 0; c < bank.in_channels; ++c)
      accumulate(acc, filter_circular(inputs[c], bank.weights[static_cast<size_t>(f) * bank.in_channels + c]));
    out.push_back(std::move(acc));
  }
  return out;
}

std::pair<FeatureImages, StageFeatureTape> stage_features_forward(
    const std::vector<Image>& inputs, const StageParams& params) {
  StageFeatureTape tape;
  tape.inputs = inputs;

  std::vector<Image> act;
  {
    std::vector<Image> pre = conv_forward(inputs, params.conv);
    act.reserve(pre.size());
    for (const Image& z : pre) act.push_back(tanh_image(z));
  }
  tape.conv_act = act;

  for (const HiddenMix& m : params.hidden) {
    act = mix_forward(act, m);
    tape.mix_act.push_back(act);
  }

  const Recombiner& rec = params.out;
  if (static_cast<int>(act.size()) != rec.hidden)
    throw DimensionError("recombiner: hidden count mismatch");
  FeatureImages feats;
  for (int i = 0; i < rec.pairs; ++i) {
    Image xt(inputs[0].width, inputs[0].height, 0.0);
    Image yt(inputs[0].width, inputs[0].height, 0.0);
    for (int k = 0; k < rec.hidden; ++k) {
      const double b = rec.beta[static_cast<size_t>(i) * rec.hidden + k];
      const double a = rec.alpha[static_cast<size_t>(i) * rec.hidden + k];
      for (size_t p = 0; p < xt.data.size(); ++p) {
        xt.data[p] += b * act[k].data[p];
        yt.data[p] += a * act[k].data[p];
      }
    }
    feats.x_tilde.push_back(std::move(xt));
    feats.y_tilde.push_back(std::move(yt));
  }
  return {std::move(feats), std::move(tape)};
}

std::pair<std::vector<Image>, StageGrads> stage_features_backward(
    const StageFeatureTape& tape, const StageParams& params,
    const FeatureImages& delta_feats) {
  const Recombiner& rec = params.out;
  if (static_cast<int>(delta_feats.count()) != rec.pairs)
    throw DimensionError("stage_features_backward: feature pair count mismatch");

  StageGrads grads = zero_grads_like(params);
  const std::vector<Image>& last_act =
      params.hidden.empty() ? tape.conv_act : tape.mix_act.back();

  // Recombiner: δh_k = Σ_i (β_ik δx̃_i + α_ik δỹ_i); grad entries are inner
  // products of the deltas with the hidden images.
  std::vector<Image> delta_act(rec.hidden,
                               Image(tape.inputs[0].width, tape.inputs[0].height, 0.0));
  for (int i = 0; i < rec.pairs; ++i)
    for (int k = 0; k < rec.hidden; ++k) {
      const size_t idx = static_cast<size_t>(i) * rec.hidden + k;
      grads.out.beta[idx] = dot(delta_feats.x_tilde[i], last_act[k]);
      grads.out.alpha[idx] = dot(delta_feats.y_tilde[i], last_act[k]);
      const double b = rec.beta[idx], a = rec.alpha[idx];
      for (size_t p = 0; p < delta_act[k].data.size(); ++p)
        delta_act[k].data[p] += b * delta_feats.x_tilde[i].data[p] +
                                a * delta_feats.y_tilde[i].data[p];
    }

  // Hidden mixes, last to first.
  for (int m = static_cast<int>(params.hidden.size()) - 1; m >= 0; --m) {
    const HiddenMix& mix = params.hidden[m];
    const std::vector<Image>& act = tape.mix_act[m];
    const std::vector<Image>& below = m == 0 ? tape.conv_act : tape.mix_act[m - 1];

    std::vector<Image> delta_z;
    delta_z.reserve(mix.out);
    for (int k = 0; k < mix.out; ++k) delta_z.push_back(tanh_backward(delta_act[k], act[k]));

    std::vector<Image> delta_below(mix.in,
                                   Image(tape.inputs[0].width, tape.inputs[0].height, 0.0));
    for (int k = 0; k < mix.out; ++k)
      for (int j = 0; j < mix.in; ++j) {
        const size_t idx = static_cast<size_t>(k) * mix.in + j;
        grads.hidden[m].w[idx] = dot(delta_z[k], below[j]);
        const double w = mix.w[idx];
        for (size_t p = 0; p < delta_below[j].data.size(); ++p)
          delta_below[j].data[p] += w * delta_z[k].data[p];
      }
    delta_act = std::move(delta_below);
  }

  // Conv bank.
  const ConvBank& bank = params.conv;
  std::vector<Image> delta_inputs(bank.in_channels,
                                  Image(tape.inputs[0].width, tape.inputs[0].height, 0.0));
  for (int f = 0; f < bank.num_filters; ++f) {
    const Image delta_z = tanh_backward(delta_act[f], tape.conv_act[f]);
    if (bank.use_bias) grads.conv.bias[f] = sum(delta_z);
    for (int c = 0; c < bank.in_channels; ++c) {
      const size_t idx = static_cast<size_t>(f) * bank.in_channels + c;
      grads.conv.weights[idx] =
          filter_circular_adjoint_taps(delta_z, tape.inputs[c], bank.filter_size);
      accumulate(delta_inputs[c],
                 filter_circular_adjoint_image(delta_z, bank.weights[idx]));
    }
  }
  return {std::move(delta_inputs), std::move(grads)};
}

StageParams init_params(const StageShape& shape, Rng& rng) {
  if (shape.num_filters <= 0 || shape.pairs <= 0 || shape.filter_size % 2 == 0)
    throw DimensionError("init_params: bad stage shape");
  StageParams p;
  p.conv.num_filters = shape.num_filters;
  p.conv.filter_size = shape.filter_size;
  p.conv.in_channels = shape.in_channels;
  p.conv.use_bias = shape.use_bias;
  const double conv_bound =
      1.0 / std::sqrt(static_cast<double>(shape.in_channels) * shape.filter_size * shape.filter_size);
  for (int f = 0; f < shape.num_filters * shape.in_channels; ++f) {
    Image taps(shape.filter_size, shape.filter_size);
    for (auto& v : taps.data) v = rng.uniform(-conv_bound, conv_bound);
    p.conv.weights.push_back(std::move(taps));
  }
  p.conv.bias.assign(shape.num_filters, 0.0);

  const double mix_bound = 1.0 / std::sqrt(static_cast<double>(shape.num_filters));
  for (int b = 0; b < shape.hidden_blocks; ++b) {
    HiddenMix m;
    m.out = m.in = shape.num_filters;
    m.w.resize(static_cast<size_t>(m.out) * m.in);
    for (auto& v : m.w) v = rng.uniform(-mix_bound, mix_bound);
    p.hidden.push_back(std::move(m));
  }

  p.out.pairs = shape.pairs;
  p.out.hidden = shape.num_filters;
  p.out.alpha.resize(static_cast<size_t>(shape.pairs) * shape.num_filters);
  p.out.beta.resize(p.out.alpha.size());
  for (auto& v : p.out.alpha) v = rng.uniform(-mix_bound, mix_bound);
  for (auto& v : p.out.beta) v = rng.uniform(-mix_bound, mix_bound);

  p.log_beta_x = std::log(1e-2);
  return p;
}

StageShape shape_of(const StageParams& params) {
  StageShape s;
  s.num_filters = params.conv.num_filters;
  s.filter_size = params.conv.filter_size;
  s.in_channels = params.conv.in_channels;
  s.hidden_blocks = static_cast<int>(params.hidden.size());
  s.pairs = params.out.pairs;
  s.use_bias = params.conv.use_bias;
  return s;
}

StageGrads zero_grads_like(const StageParams& params) {
  StageGrads g = params;
  for (auto& taps : g.conv.weights)
    std::fill(taps.data.begin(), taps.data.end(), 0.0);
  std::fill(g.conv.bias.begin(), g.conv.bias.end(), 0.0);
  for (auto& m : g.hidden) std::fill(m.w.begin(), m.w.end(), 0.0);
  std::fill(g.out.alpha.begin(), g.out.alpha.end(), 0.0);
  std::fill(g.out.beta.begin(), g.out.beta.end(), 0.0);
  g.log_beta_x = 0.0;
  return g;
}

std::vector<double*> param_ptrs(StageParams& params) {
  std::vector<double*> ptrs;
  ptrs.reserve(param_count(params));
  for (auto& taps : params.conv.weights)
    for (auto& v : taps.data) ptrs.push_back(&v);
  if (params.conv.use_bias)
    for (auto& v : params.conv.bias) ptrs.push_back(&v);
  for (auto& m : params.hidden)
    for (auto& v : m.w) ptrs.push_back(&v);
  for (auto& v : params.out.alpha) ptrs.push_back(&v);
  for (auto& v : params.out.beta) ptrs.push_back(&v);
  ptrs.push_back(&params.log_beta_x);
  return ptrs;
}

size_t param_count(const StageParams& params) {
  size_t n = params.conv.weights.size() *
             (static_cast<size_t>(params.conv.filter_size) * params.conv.filter_size);
  if (params.conv.use_bias) n += params.conv.bias.size();
  for (const auto& m : params.hidden) n += m.w.size();
  n += params.out.alpha.size() + params.out.beta.size();
  return n + 1;  // log_beta_x
}

}  // namespace deblur
