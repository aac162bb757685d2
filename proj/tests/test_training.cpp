#include <doctest.h>

#include <cmath>
#include <functional>
#include <memory>

#include "deblur/blur_synth.hpp"
#include "deblur/errors.hpp"
#include "deblur/geometry.hpp"
#include "deblur/training.hpp"
#include "test_oracles.hpp"

using namespace deblur;

namespace {

StageParams small_stage(Rng& rng, int in_channels) {
  StageShape sh;
  sh.num_filters = 2;
  sh.filter_size = 3;
  sh.in_channels = in_channels;
  sh.hidden_blocks = 1;
  sh.pairs = 2;
  return init_params(sh, rng);
}

MultiScaleModel small_model(Rng& rng, int kernel_size) {
  MultiScaleModel m;
  ScaleNetwork net;
  net.kernel_size = kernel_size;
  net.stages.push_back(small_stage(rng, 1));
  m.scales.push_back(std::move(net));
  return m;
}

// Deterministic 16² sample stream with 5×5 GP-free kernels.
std::function<std::optional<TrainExample>()> make_stream(uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng]() -> std::optional<TrainExample> {
    Image texture = synth_texture(16, 16, *rng);
    BlurKernel k = oracle::random_simplex_kernel(5, *rng);
    return to_example(make_sample(texture, k, 0.0, *rng, 16));
  };
}

std::vector<double> snapshot_stage(const MultiScaleModel& m, size_t stage) {
  StageParams copy = m.scales[0].stages[stage];
  std::vector<double> vals;
  for (double* p : param_ptrs(copy)) vals.push_back(*p);
  return vals;
}

}  // namespace

// ---- optimizer steps ----

TEST_CASE("adadelta reproduces the hand-computed first step") {
  OptimizerConfig cfg;
  double p = 1.0;
  std::vector<double*> params = {&p};
  OptimizerState state;
  state.resize(1);
  adadelta_step(params, {1.0}, state, cfg);

  // E[g²] = 0.05, so Δ = −0.01·√(1e-6)/√(0.05 + 1e-6).
  const double expected = -0.01 * std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  CHECK(std::abs((p - 1.0) - expected) < 1e-12);
  CHECK(p - 1.0 == doctest::Approx(-4.4721e-5).epsilon(1e-4));
  CHECK(state.grad_sq[0] == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("adadelta matches a scalar reference over several steps") {
  OptimizerConfig cfg;
  cfg.adadelta_lr = 0.02;
  cfg.adadelta_decay = 0.9;
  cfg.adadelta_eps = 1e-7;
  const std::vector<double> gs = {1.0, -0.5, 0.25, 2.0, -1.0};

  double p = 0.3;
  std::vector<double*> params = {&p};
  OptimizerState state;
  state.resize(1);

  double ref = 0.3, eg = 0.0, ed = 0.0;
  for (double g : gs) {
    adadelta_step(params, {g}, state, cfg);
    eg = 0.9 * eg + 0.1 * g * g;
    const double d = -0.02 * std::sqrt(ed + 1e-7) / std::sqrt(eg + 1e-7) * g;
    ed = 0.9 * ed + 0.1 * d * d;
    ref += d;
    CHECK(std::abs(p - ref) < 1e-12);
  }
}

TEST_CASE("zero gradients leave parameters fixed while accumulators decay") {
  OptimizerConfig cfg;
  double p = 2.0;
  std::vector<double*> params = {&p};
  OptimizerState state;
  state.resize(1);
  state.grad_sq[0] = 0.4;
  state.update_sq[0] = 0.1;
  adadelta_step(params, {0.0}, state, cfg);
  CHECK(p == 2.0);
  CHECK(state.grad_sq[0] == doctest::Approx(0.95 * 0.4).epsilon(1e-15));
  CHECK(state.update_sq[0] == doctest::Approx(0.95 * 0.1).epsilon(1e-15));
}

TEST_CASE("adadelta first steps are insensitive to gradient scale as eps vanishes") {
  OptimizerConfig cfg;
  cfg.adadelta_eps = 1e-12;
  auto first_step = [&](double g) {
    double p = 0.0;
    std::vector<double*> params = {&p};
    OptimizerState state;
    state.resize(1);
    adadelta_step(params, {g}, state, cfg);
    return p;
  };
  const double small = first_step(1.0);
  const double large = first_step(100.0);
  CHECK(std::abs(small - large) / std::abs(small) < 1e-6);
}

TEST_CASE("frozen entries are untouched by either optimizer") {
  OptimizerConfig cfg;
  double a = 1.0, b = 1.0;
  std::vector<double*> params = {&a, &b};
  std::vector<uint8_t> frozen = {1, 0};
  OptimizerState state;
  state.resize(2);
  adadelta_step(params, {3.0, 3.0}, state, cfg, &frozen);
  CHECK(a == 1.0);
  CHECK(b != 1.0);
  CHECK(state.grad_sq[0] == 0.0);

  a = b = 1.0;
  cfg.sgd_lr = 0.1;
  sgd_step(params, {1.0, 1.0}, cfg, &frozen);
  CHECK(a == 1.0);
  CHECK(b == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("sgd is linear in gradients and learning rate") {
  OptimizerConfig cfg;
  cfg.sgd_lr = 0.1;
  double p = 1.0;
  std::vector<double*> params = {&p};
  sgd_step(params, {1.0}, cfg);
  CHECK(p == doctest::Approx(0.9).epsilon(1e-15));
  sgd_step(params, {0.0}, cfg);
  CHECK(p == doctest::Approx(0.9).epsilon(1e-15));

  double two = 1.0, one = 1.0;
  std::vector<double*> ptwo = {&two}, pone = {&one};
  sgd_step(ptwo, {0.3}, cfg);
  sgd_step(ptwo, {0.7}, cfg);
  sgd_step(pone, {1.0}, cfg);
  CHECK(two == doctest::Approx(one).epsilon(1e-15));
}

TEST_CASE("optimizer buffer size mismatches are refused") {
  OptimizerConfig cfg;
  double p = 0.0;
  std::vector<double*> params = {&p};
  OptimizerState state;
  state.resize(2);
  CHECK_THROWS_AS(adadelta_step(params, {1.0}, state, cfg), DimensionError);
}

// ---- skip rule ----

TEST_CASE("the outlier rule triggers strictly above the factor") {
  const double m = 0.37;
  CHECK(should_skip(10.01 * m, m, 10.0));
  CHECK_FALSE(should_skip(9.99 * m, m, 10.0));
  CHECK_FALSE(should_skip(10.0 * m, m, 10.0));
}

// ---- kernel loss ----

TEST_CASE("kernel loss vanishes when the prediction equals the target") {
  Rng rng(110);
  BlurKernel target = oracle::random_simplex_kernel(5, rng);
  Image raw = pad_or_embed(to_image(target), 16, 16);
  auto [loss, delta] = kernel_l2_loss(raw, target);
  CHECK(loss == 0.0);
  CHECK(max_abs(delta) == 0.0);
}

TEST_CASE("kernel loss against a two-pixel target is hand-computable") {
  BlurKernel target(5);
  target.at(2, 2) = 0.5;
  target.at(3, 2) = 0.5;
  Image raw = pad_or_embed(to_image(identity_kernel(5)), 11, 11);
  auto [loss, delta] = kernel_l2_loss(raw, target);
  CHECK(loss == doctest::Approx(0.5).epsilon(1e-15));  // (1−½)² + (0−½)²
  CHECK(delta.at(5, 5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(delta.at(6, 5) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("kernel loss gradient matches finite differences") {
  Rng rng(111);
  Image raw(9, 7, 0.0);
  for (auto& v : raw.data) {  // keep entries away from the clamp boundary
    const double mag = 0.05 + rng.uniform();
    v = rng.uniform() < 0.3 ? -mag : mag;
  }
  BlurKernel target = oracle::random_simplex_kernel(5, rng);

  auto [loss, delta] = kernel_l2_loss(raw, target);
  const double h = 1e-6;
  std::vector<double> a, n;
  for (size_t i = 0; i < raw.data.size(); ++i) {
    a.push_back(delta.data[i]);
    Image mod = raw;
    mod.data[i] += h;
    const double lp = kernel_l2_loss(mod, target).first;
    mod.data[i] -= 2 * h;
    const double lm = kernel_l2_loss(mod, target).first;
    n.push_back((lp - lm) / (2 * h));
  }
  CHECK(oracle::rel_error_inf(a, n) < 1e-6);
}

TEST_CASE("clamped raw entries receive no loss gradient") {
  BlurKernel target(3);
  target.at(1, 1) = 1.0;
  Image raw(7, 7, 0.0);
  raw.at(2, 3) = -0.4;  // inside the 3×3 crop, clamped
  auto [loss, delta] = kernel_l2_loss(raw, target);
  CHECK(delta.at(2, 3) == 0.0);
  CHECK(loss == doctest::Approx(1.0).epsilon(1e-15));
}

// ---- the training loop ----

TEST_CASE("stage additions follow the schedule and grow the model") {
  Rng rng(112);
  MultiScaleModel model = small_model(rng, 5);
  const size_t before = param_count(model.scales[0].stages[0]);

  TrainSchedule sched;
  sched.steps = 12;
  sched.steps_per_stage_add = 5;
  sched.freeze_steps_after_add = 3;
  sched.max_stages = 2;
  OptimizerConfig opt;

  TrainingReport rep = train_scale(model, 0, make_stream(1), sched, opt, rng);
  REQUIRE(rep.stage_add_steps == std::vector<int>{5});
  REQUIRE(model.scales[0].stages.size() == 2);
  CHECK(param_count(model.scales[0].stages[1]) > 0);
  CHECK(rep.records.size() == 12);
  for (const auto& r : rep.records)
    CHECK(r.stage_count == (r.step < 5 ? 1 : 2));

  const size_t after = param_count(model.scales[0].stages[0]) +
                       param_count(model.scales[0].stages[1]);
  CHECK(after > before);
}

TEST_CASE("earlier stages are bit-identical inside the freeze window") {
  Rng rng(113);
  MultiScaleModel model = small_model(rng, 5);

  TrainSchedule sched;
  sched.steps = 10;
  sched.steps_per_stage_add = 5;
  sched.freeze_steps_after_add = 3;  // stage 0 frozen for steps 5,6,7
  sched.max_stages = 2;
  sched.checkpoint_every = 1;

  std::vector<std::vector<double>> snaps(sched.steps);
  TrainHooks hooks;
  hooks.checkpoint = [&](const MultiScaleModel& m, int step) {
    snaps[static_cast<size_t>(step)] = snapshot_stage(m, 0);
  };

  train_scale(model, 0, make_stream(2), sched, OptimizerConfig{}, rng, hooks);
  CHECK(snaps[5] == snaps[4]);
  CHECK(snaps[6] == snaps[4]);
  CHECK(snaps[7] == snaps[4]);
  CHECK(snaps[8] != snaps[7]);  // thawed again
}

TEST_CASE("outliers are skipped without disturbing the running mean") {
  Rng rng(114);
  MultiScaleModel model = small_model(rng, 5);

  // With a tiny factor every loss after the first counts as an outlier, so
  // the mean must stay pinned at the first sample's loss.
  TrainSchedule sched;
  sched.steps = 3;
  sched.steps_per_stage_add = 100;
  sched.loss_skip_factor = 1e-6;
  TrainingReport rep =
      train_scale(model, 0, make_stream(3), sched, OptimizerConfig{}, rng);

  REQUIRE(rep.records.size() == 3);
  CHECK_FALSE(rep.records[0].skipped);
  CHECK(rep.records[1].skipped);
  CHECK(rep.records[2].skipped);
  CHECK(rep.records[1].running_loss == rep.records[0].running_loss);
  CHECK(rep.records[2].running_loss == rep.records[0].running_loss);
  CHECK(rep.skipped_total == 2);
}

TEST_CASE("an infinite skip factor never skips") {
  Rng rng(115);
  MultiScaleModel model = small_model(rng, 5);
  TrainSchedule sched;
  sched.steps = 6;
  sched.steps_per_stage_add = 100;
  sched.loss_skip_factor = 1e300;
  TrainingReport rep =
      train_scale(model, 0, make_stream(4), sched, OptimizerConfig{}, rng);
  CHECK(rep.skipped_total == 0);
}

TEST_CASE("an empty stream is a configuration error") {
  Rng rng(116);
  MultiScaleModel model = small_model(rng, 5);
  TrainSchedule sched;
  sched.steps = 4;
  auto empty = []() -> std::optional<TrainExample> { return std::nullopt; };
  CHECK_THROWS_AS(train_scale(model, 0, empty, sched, OptimizerConfig{}, rng),
                  ConfigError);
}

TEST_CASE("a stream running dry ends training with the steps seen") {
  Rng rng(117);
  MultiScaleModel model = small_model(rng, 5);
  TrainSchedule sched;
  sched.steps = 10;
  sched.steps_per_stage_add = 100;
  auto base = make_stream(5);
  int left = 4;
  auto stream = [&]() -> std::optional<TrainExample> {
    if (left-- <= 0) return std::nullopt;
    return base();
  };
  TrainingReport rep = train_scale(model, 0, stream, sched, OptimizerConfig{}, rng);
  CHECK(rep.records.size() == 4);
}

TEST_CASE("mismatched kernel sizes in the stream are refused") {
  Rng rng(118);
  MultiScaleModel model = small_model(rng, 7);
  TrainSchedule sched;
  sched.steps = 2;
  CHECK_THROWS_AS(
      train_scale(model, 0, make_stream(6), sched, OptimizerConfig{}, rng),
      DimensionError);
}

TEST_CASE("training runs are deterministic under fixed seeds") {
  auto run = [] {
    Rng rng(119);
    MultiScaleModel model = small_model(rng, 5);
    TrainSchedule sched;
    sched.steps = 8;
    sched.steps_per_stage_add = 4;
    sched.freeze_steps_after_add = 2;
    sched.max_stages = 2;
    TrainingReport rep =
        train_scale(model, 0, make_stream(7), sched, OptimizerConfig{}, rng);
    return std::make_pair(rep, snapshot_stage(model, 0));
  };
  auto [ra, pa] = run();
  auto [rb, pb] = run();
  CHECK(pa == pb);
  REQUIRE(ra.records.size() == rb.records.size());
  for (size_t i = 0; i < ra.records.size(); ++i) {
    CHECK(ra.records[i].loss == rb.records[i].loss);
    CHECK(ra.records[i].running_loss == rb.records[i].running_loss);
    CHECK(ra.records[i].skipped == rb.records[i].skipped);
  }
}

TEST_CASE("beta_x stays inside its safety band during training") {
  Rng rng(120);
  MultiScaleModel model = small_model(rng, 5);
  model.scales[0].stages[0].log_beta_x = std::log(1e-8) - 5.0;  // out of band

  TrainSchedule sched;
  sched.steps = 1;
  sched.steps_per_stage_add = 100;
  train_scale(model, 0, make_stream(8), sched, OptimizerConfig{}, rng);
  const double lb = model.scales[0].stages[0].log_beta_x;
  CHECK(lb >= std::log(1e-8) - 1e-12);
  CHECK(lb <= std::log(1e3) + 1e-12);
}
