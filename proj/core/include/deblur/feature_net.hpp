#pragma once

#include <vector>

#include "deblur/image.hpp"
#include "deblur/quotient.hpp"
#include "deblur/rng.hpp"

namespace deblur {

// Bank of small odd square filters over one or two input channels.
struct ConvBank {
  int num_filters = 0;
  int filter_size = 0;
  int in_channels = 1;
  bool use_bias = true;
  std::vector<Image> weights;  // filter-major: weights[f * in_channels + c]
  std::vector<double> bias;    // per filter; kept at 0 and frozen if !use_bias
};

// Pixel-wise linear mixing of hidden images followed by tanh.
struct HiddenMix {
  int out = 0;
  int in = 0;
  std::vector<double> w;  // row-major out × in
};

// Final linear recombination into feature pairs: alpha feeds the blurry-side
// features ỹ_i, beta the latent-side x̃_i; both read the same hidden images.
struct Recombiner {
  int pairs = 0;
  int hidden = 0;
  std::vector<double> alpha;  // row-major pairs × hidden
  std::vector<double> beta;
};

// All learned parameters of one stage. beta_x lives here as its logarithm so
// the optimizer can move it unconstrained while the quotient layer always
// sees a positive regularizer.
struct StageParams {
  ConvBank conv;
  std::vector<HiddenMix> hidden;
  Recombiner out;
  double log_beta_x = 0.0;
};

// Gradients travel in a container of the same shape as the parameters.
using StageGrads = StageParams;

struct StageShape {
  int num_filters = 32;
  int filter_size = 7;
  int in_channels = 1;
  int hidden_blocks = 1;  // mix-to-width + tanh repetitions after the conv
  int pairs = 2;          // feature pairs; the recombiner emits 2·pairs images
  bool use_bias = true;
};

struct StageFeatureTape {
  std::vector<Image> inputs;
  std::vector<Image> conv_act;              // tanh outputs after the conv bank
  std::vector<std::vector<Image>> mix_act;  // tanh outputs after each hidden mix
};

// Linear part of the conv layer: out_j = Σ_c f_{j,c} * in_c + bias_j, circular
// boundaries, same-size outputs.
std::vector<Image> conv_forward(const std::vector<Image>& inputs, const ConvBank& bank);

// Full feature extraction: conv → tanh → (mix → tanh)^blocks → recombine.
std::pair<FeatureImages, StageFeatureTape> stage_features_forward(
    const std::vector<Image>& inputs, const StageParams& params);

// Backprop through the stack; returns gradients w.r.t. the stage inputs and
// every parameter. delta_feats pairs up with the forward's FeatureImages.
std::pair<std::vector<Image>, StageGrads> stage_features_backward(
    const StageFeatureTape& tape, const StageParams& params,
    const FeatureImages& delta_feats);

// Uniform(±1/√fan_in) weights, zero biases, beta_x = 1e-2. The draw order is
// fixed (conv filter-major, hidden mixes, alpha, beta), so a fixed seed gives
// bit-identical parameters.
StageParams init_params(const StageShape& shape, Rng& rng);

StageShape shape_of(const StageParams& params);
StageGrads zero_grads_like(const StageParams& params);

// Stable flattening order shared by the optimizer, the initializer, and the
// model file: conv weights, conv biases (when enabled), hidden mixes, alpha,
// beta, log_beta_x.
std::vector<double*> param_ptrs(StageParams& params);
size_t param_count(const StageParams& params);

}  // namespace deblur
