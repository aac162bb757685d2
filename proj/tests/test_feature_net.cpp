#include <doctest.h>

#include <cmath>

#include "deblur/feature_net.hpp"
#include "deblur/geometry.hpp"
#include "deblur/rng.hpp"
#include "test_oracles.hpp"

using namespace deblur;

namespace {

StageParams small_stage(int in_channels, Rng& rng, int filters = 2, int pairs = 2) {
  StageShape sh;
  sh.num_filters = filters;
  sh.filter_size = 3;
  sh.in_channels = in_channels;
  sh.hidden_blocks = 1;
  sh.pairs = pairs;
  return init_params(sh, rng);
}

// Loss = Σ_i ⟨x̃_i, Gx_i⟩ + ⟨ỹ_i, Gy_i⟩ against fixed random probes.
double probe_loss(const FeatureImages& f, const FeatureImages& probes) {
  double L = 0.0;
  for (size_t i = 0; i < f.count(); ++i)
    L += dot(f.x_tilde[i], probes.x_tilde[i]) + dot(f.y_tilde[i], probes.y_tilde[i]);
  return L;
}

}  // namespace

TEST_CASE("conv_forward with a centered delta filter is the identity") {
  ConvBank bank;
  bank.num_filters = 1;
  bank.filter_size = 3;
  bank.in_channels = 1;
  bank.weights = {to_image(identity_kernel(3))};
  bank.bias = {0.0};
  Rng rng(50);
  Image img = oracle::random_image(8, 6, rng);
  auto out = conv_forward({img}, bank);
  REQUIRE(out.size() == 1);
  CHECK(oracle::max_abs_diff(out[0], img) < 1e-14);
}

TEST_CASE("horizontal difference filter of a constant image is zero") {
  ConvBank bank;
  bank.num_filters = 1;
  bank.filter_size = 3;
  bank.in_channels = 1;
  Image taps(3, 3, 0.0);
  taps.at(1, 1) = -1.0;
  taps.at(2, 1) = 1.0;
  bank.weights = {taps};
  bank.bias = {0.0};
  auto out = conv_forward({Image(7, 7, 0.33)}, bank);
  CHECK(max_abs(out[0]) < 1e-14);
}

TEST_CASE("conv_forward matches brute-force spatial convolution") {
  Rng rng(51);
  ConvBank bank;
  bank.num_filters = 1;
  bank.filter_size = 3;
  bank.in_channels = 1;
  bank.weights = {oracle::random_image(3, 3, rng, -1.0, 1.0)};
  bank.bias = {0.0};
  Image img = oracle::random_image(8, 8, rng);
  auto out = conv_forward({img}, bank);
  Image expect = oracle::spatial_convolve(img, to_kernel(bank.weights[0]));
  CHECK(oracle::max_abs_diff(out[0], expect) < 1e-10);
}

TEST_CASE("conv_forward rejects channel mismatch") {
  Rng rng(52);
  StageParams p = small_stage(2, rng);
  Image img = oracle::random_image(6, 6, rng);
  CHECK_THROWS_AS(conv_forward({img}, p.conv), DimensionError);
}

TEST_CASE("zero recombiners produce zero features") {
  Rng rng(53);
  StageParams p = small_stage(1, rng);
  std::fill(p.out.alpha.begin(), p.out.alpha.end(), 0.0);
  std::fill(p.out.beta.begin(), p.out.beta.end(), 0.0);
  auto [f, tape] = stage_features_forward({oracle::random_image(8, 8, rng)}, p);
  for (const auto& im : f.x_tilde) CHECK(max_abs(im) == 0.0);
  for (const auto& im : f.y_tilde) CHECK(max_abs(im) == 0.0);
}

TEST_CASE("tanh saturation bounds the features by the coefficient mass") {
  Rng rng(54);
  StageParams p = small_stage(1, rng);
  Image img = oracle::random_image(8, 8, rng);
  for (auto& v : img.data) v *= 1e3;
  auto [f, tape] = stage_features_forward({img}, p);
  for (int i = 0; i < p.out.pairs; ++i) {
    double mass = 0.0;
    for (int k = 0; k < p.out.hidden; ++k)
      mass += std::abs(p.out.beta[static_cast<size_t>(i) * p.out.hidden + k]);
    CHECK(max_abs(f.x_tilde[i]) <= mass + 1e-6);
  }
}

TEST_CASE("hidden images after tanh stay inside (-1, 1)") {
  Rng rng(55);
  StageParams p = small_stage(1, rng);
  auto [f, tape] = stage_features_forward({oracle::random_image(9, 9, rng, -3.0, 3.0)}, p);
  for (const auto& layer : {tape.conv_act, tape.mix_act[0]})
    for (const auto& im : layer)
      for (double v : im.data) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
}

TEST_CASE("features are equivariant to circular shifts of the input") {
  Rng rng(56);
  StageParams p = small_stage(1, rng);
  Image img = oracle::random_image(10, 8, rng);
  auto [f0, t0] = stage_features_forward({img}, p);
  auto [f1, t1] = stage_features_forward({circular_shift(img, 3, -2)}, p);
  for (size_t i = 0; i < f0.count(); ++i) {
    CHECK(oracle::max_abs_diff(circular_shift(f0.x_tilde[i], 3, -2), f1.x_tilde[i]) < 1e-10);
    CHECK(oracle::max_abs_diff(circular_shift(f0.y_tilde[i], 3, -2), f1.y_tilde[i]) < 1e-10);
  }
}

TEST_CASE("stage_features_backward matches finite differences on every parameter") {
  Rng rng(57);
  const int dim = 8;
  const double h = 1e-5;
  for (int channels : {1, 2}) {
    StageParams p = small_stage(channels, rng);
    std::vector<Image> inputs;
    for (int c = 0; c < channels; ++c)
      inputs.push_back(oracle::random_image(dim, dim, rng));
    FeatureImages probes;
    for (int i = 0; i < p.out.pairs; ++i) {
      probes.x_tilde.push_back(oracle::random_image(dim, dim, rng, -1.0, 1.0));
      probes.y_tilde.push_back(oracle::random_image(dim, dim, rng, -1.0, 1.0));
    }

    auto [f, tape] = stage_features_forward(inputs, p);
    auto [dinputs, grads] = stage_features_backward(tape, p, probes);

    auto ptrs = param_ptrs(p);
    auto gptrs = param_ptrs(grads);
    std::vector<double> analytic, numeric;
    for (size_t i = 0; i + 1 < ptrs.size(); ++i) {  // last entry is log_beta_x
      analytic.push_back(*gptrs[i]);
      const double saved = *ptrs[i];
      *ptrs[i] = saved + h;
      const double lp = probe_loss(stage_features_forward(inputs, p).first, probes);
      *ptrs[i] = saved - h;
      const double lm = probe_loss(stage_features_forward(inputs, p).first, probes);
      *ptrs[i] = saved;
      numeric.push_back((lp - lm) / (2 * h));
    }
    CHECK(oracle::rel_error_inf(analytic, numeric) < 1e-4);

    // input gradients
    analytic.clear();
    numeric.clear();
    for (int c = 0; c < channels; ++c)
      for (size_t i = 0; i < inputs[c].data.size(); ++i) {
        analytic.push_back(dinputs[c].data[i]);
        std::vector<Image> mod = inputs;
        mod[c].data[i] += h;
        const double lp = probe_loss(stage_features_forward(mod, p).first, probes);
        mod[c].data[i] -= 2 * h;
        const double lm = probe_loss(stage_features_forward(mod, p).first, probes);
        numeric.push_back((lp - lm) / (2 * h));
      }
    CHECK(oracle::rel_error_inf(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("bias gradient on 1x1 images reduces to the scalar chain rule") {
  // One pixel: x̃ = β·tanh(m·tanh(w·v + b)), so
  // dL/db = δ · β · (1-a1²) · m · (1-a0²) with a0 = tanh(w v + b), a1 = tanh(m a0).
  StageParams p;
  p.conv.num_filters = 1;
  p.conv.filter_size = 1;
  p.conv.in_channels = 1;
  p.conv.use_bias = true;
  p.conv.weights = {Image(1, 1, 0.7)};
  p.conv.bias = {0.3};
  p.hidden = {HiddenMix{1, 1, {1.4}}};
  p.out.pairs = 1;
  p.out.hidden = 1;
  p.out.alpha = {0.0};
  p.out.beta = {2.0};
  p.log_beta_x = 0.0;

  const double v = 0.5;
  auto [f, tape] = stage_features_forward({Image(1, 1, v)}, p);
  FeatureImages probes;
  probes.x_tilde = {Image(1, 1, 1.0)};
  probes.y_tilde = {Image(1, 1, 0.0)};
  auto [dinputs, grads] = stage_features_backward(tape, p, probes);

  const double a0 = std::tanh(0.7 * v + 0.3);
  const double a1 = std::tanh(1.4 * a0);
  const double expect = 2.0 * (1 - a1 * a1) * 1.4 * (1 - a0 * a0);
  CHECK(grads.conv.bias[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("zero feature deltas give zero gradients") {
  Rng rng(58);
  StageParams p = small_stage(1, rng);
  auto [f, tape] = stage_features_forward({oracle::random_image(6, 6, rng)}, p);
  FeatureImages zero;
  for (int i = 0; i < p.out.pairs; ++i) {
    zero.x_tilde.push_back(Image(6, 6, 0.0));
    zero.y_tilde.push_back(Image(6, 6, 0.0));
  }
  auto [dinputs, grads] = stage_features_backward(tape, p, zero);
  for (const auto& d : dinputs) CHECK(max_abs(d) == 0.0);
  auto gp = param_ptrs(grads);
  for (size_t i = 0; i + 1 < gp.size(); ++i) CHECK(*gp[i] == 0.0);
}

TEST_CASE("init_params is deterministic and matches the declared law") {
  StageShape sh;
  sh.num_filters = 8;
  sh.filter_size = 5;
  sh.in_channels = 2;
  Rng a(1234), b(1234);
  StageParams pa = init_params(sh, a);
  StageParams pb = init_params(sh, b);
  auto qa = param_ptrs(pa), qb = param_ptrs(pb);
  REQUIRE(qa.size() == qb.size());
  for (size_t i = 0; i < qa.size(); ++i) CHECK(*qa[i] == *qb[i]);

  SUBCASE("beta_x initial value is 1e-2") {
    CHECK(std::exp(pa.log_beta_x) == doctest::Approx(1e-2).epsilon(1e-12));
  }
  SUBCASE("filter weight variance is near 1/(3 fan_in)") {
    const double fan_in = 2.0 * 5 * 5;
    double var = 0.0;
    size_t n = 0;
    for (const auto& taps : pa.conv.weights)
      for (double v : taps.data) {
        var += v * v;
        ++n;
      }
    var /= static_cast<double>(n);
    CHECK(var == doctest::Approx(1.0 / (3.0 * fan_in)).epsilon(0.2));
  }
  SUBCASE("biases start at zero") {
    for (double v : pa.conv.bias) CHECK(v == 0.0);
  }
}

TEST_CASE("param_count matches param_ptrs") {
  Rng rng(59);
  StageParams p = small_stage(2, rng, 3, 2);
  CHECK(param_ptrs(p).size() == param_count(p));
  StageShape sh = shape_of(p);
  sh.use_bias = false;
  StageParams q = init_params(sh, rng);
  CHECK(param_ptrs(q).size() == param_count(q));
  CHECK(param_count(q) + 3 == param_count(p));  // three biases dropped
}
