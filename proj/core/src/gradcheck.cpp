#include "deblur/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "deblur/feature_net.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/quotient.hpp"
#include "deblur/rng.hpp"

namespace deblur {

namespace {

Image random_image(int w, int h, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Image img(w, h);
  for (double& v : img.data) v = rng.uniform(lo, hi);
  return img;
}

// Frame entries kept away from zero (random sign, magnitude ≥ 0.05) so the
// clamp in kernel post-processing never sits on a finite-difference kink.
Image clamp_safe_frame(int w, int h, Rng& rng) {
  Image img(w, h);
  for (double& v : img.data)
    v = (rng.uniform() < 0.3 ? -1.0 : 1.0) * rng.uniform(0.05, 1.0);
  return img;
}

BlurKernel random_kernel(int size, Rng& rng) {
  BlurKernel k(size);
  double total = 0.0;
  for (double& w : k.weights) total += (w = rng.uniform(0.1, 1.0));
  for (double& w : k.weights) w /= total;
  return k;
}

// Per-instance comparison in the shared convention: the largest entrywise
// |analytic − finite-difference| normalized by the larger gradient norm.
struct InstanceCheck {
  double max_a = 0.0, max_f = 0.0, max_diff = 0.0;

  void add(double a, double f) {
    max_a = std::max(max_a, std::abs(a));
    max_f = std::max(max_f, std::abs(f));
    max_diff = std::max(max_diff, std::abs(a - f));
  }
  double rel() const { return max_diff / std::max({max_a, max_f, 1e-8}); }
};

double central(const std::function<double()>& loss, double* p, double h) {
  const double orig = *p;
  *p = orig + h;
  const double up = loss();
  *p = orig - h;
  const double dn = loss();
  *p = orig;
  return (up - dn) / (2.0 * h);
}

// The fault-injection hook: a corrupted row's analytic values are skewed so
// the comparison must fail, proving the reporter cannot silently pass.
double maybe_corrupt(double a, bool corrupt) {
  return corrupt ? 1.5 * a + 0.1 : a;
}

struct Suite {
  const GradCheckOptions& opts;
  std::vector<GradCheckRow> rows;

  void report(const std::string& layer, double rel) {
    rows.push_back({layer, rel, opts.tolerance, rel < opts.tolerance});
  }
  bool corrupted(const std::string& layer) const { return layer == opts.corrupt; }
  int heavy_instances() const { return std::max(2, opts.instances / 10); }
};

// Δx̃, Δỹ, Δβ_k of the kernel quotient on 12×12 pairs. β_k is held at 1e-2 so
// the documented step stays well inside the 1/(D+β)² curvature radius.
void check_kernel_estimate(Suite& s, Rng& rng) {
  InstanceCheck cx, cy, cb;
  const bool bad_x = s.corrupted("kernel_estimate/features_x");
  const bool bad_y = s.corrupted("kernel_estimate/features_y");
  const bool bad_b = s.corrupted("kernel_estimate/beta_k");
  for (int inst = 0; inst < s.opts.instances; ++inst) {
    FeatureImages feats;
    for (int i = 0; i < 2; ++i) {
      feats.x_tilde.push_back(random_image(12, 12, rng));
      feats.y_tilde.push_back(random_image(12, 12, rng));
    }
    double beta_k = 1e-2;
    const Image probe = random_image(12, 12, rng);
    auto loss = [&] {
      return dot(kernel_estimate_forward(feats, beta_k).first, probe);
    };

    auto [out, tape] = kernel_estimate_forward(feats, beta_k);
    KernelEstimateGrads g = kernel_estimate_backward(tape, probe);

    for (int i = 0; i < 2; ++i)
      for (size_t j = 0; j < feats.x_tilde[i].data.size(); ++j) {
        cx.add(maybe_corrupt(g.delta_x_tilde[i].data[j], bad_x),
               central(loss, &feats.x_tilde[i].data[j], s.opts.step));
        cy.add(maybe_corrupt(g.delta_y_tilde[i].data[j], bad_y),
               central(loss, &feats.y_tilde[i].data[j], s.opts.step));
      }
    cb.add(maybe_corrupt(g.delta_beta_k, bad_b),
           central(loss, &beta_k, s.opts.step));
  }
  s.report("kernel_estimate/features_x", cx.rel());
  s.report("kernel_estimate/features_y", cy.rel());
  s.report("kernel_estimate/beta_k", cb.rel());
}

// Δk, Δy, Δβ_x of the image quotient: 5×5 simplex kernels on 12×12 frames.
void check_image_estimate(Suite& s, Rng& rng) {
  InstanceCheck ck, cy, cb;
  const bool bad_k = s.corrupted("image_estimate/kernel");
  const bool bad_y = s.corrupted("image_estimate/image");
  const bool bad_b = s.corrupted("image_estimate/beta_x");
  for (int inst = 0; inst < s.opts.instances; ++inst) {
    BlurKernel kernel = random_kernel(5, rng);
    Image y = random_image(12, 12, rng);
    double beta_x = 1e-2;
    const Image probe = random_image(12, 12, rng);
    auto loss = [&] {
      return dot(image_estimate_forward(kernel, y, beta_x).first, probe);
    };

    auto [out, tape] = image_estimate_forward(kernel, y, beta_x);
    ImageEstimateGrads g = image_estimate_backward(tape, probe);

    for (size_t j = 0; j < kernel.weights.size(); ++j)
      ck.add(maybe_corrupt(g.delta_kernel.data[j], bad_k),
             central(loss, &kernel.weights[j], s.opts.step));
    for (size_t j = 0; j < y.data.size(); ++j)
      cy.add(maybe_corrupt(g.delta_y.data[j], bad_y),
             central(loss, &y.data[j], s.opts.step));
    cb.add(maybe_corrupt(g.delta_beta_x, bad_b),
           central(loss, &beta_x, s.opts.step));
  }
  s.report("image_estimate/kernel", ck.rel());
  s.report("image_estimate/image", cy.rel());
  s.report("image_estimate/beta_x", cb.rel());
}

void check_postprocess(Suite& s, Rng& rng) {
  InstanceCheck c;
  const bool bad = s.corrupted("kernel_postprocess/input");
  for (int inst = 0; inst < s.opts.instances; ++inst) {
    Image raw = clamp_safe_frame(12, 12, rng);
    const Image probe = random_image(5, 5, rng);
    auto loss = [&] {
      return dot(to_image(kernel_postprocess(raw, 5).first), probe);
    };
    auto [khat, tape] = kernel_postprocess(raw, 5);
    Image g = kernel_postprocess_backward(tape, probe.data);
    for (size_t j = 0; j < raw.data.size(); ++j)
      c.add(maybe_corrupt(g.data[j], bad),
            central(loss, &raw.data[j], s.opts.step));
  }
  s.report("kernel_postprocess/input", c.rel());
}

// The learned feature stack: every parameter and both input channels.
void check_features(Suite& s, Rng& rng) {
  InstanceCheck cp, ci;
  const bool bad_p = s.corrupted("features/params");
  const bool bad_i = s.corrupted("features/inputs");
  StageShape shape;
  shape.num_filters = 2;
  shape.filter_size = 3;
  shape.in_channels = 2;
  shape.pairs = 2;
  for (int inst = 0; inst < s.heavy_instances(); ++inst) {
    StageParams params = init_params(shape, rng);
    std::vector<Image> inputs = {random_image(8, 8, rng), random_image(8, 8, rng)};
    FeatureImages probe;
    for (int i = 0; i < shape.pairs; ++i) {
      probe.x_tilde.push_back(random_image(8, 8, rng));
      probe.y_tilde.push_back(random_image(8, 8, rng));
    }
    auto loss = [&] {
      FeatureImages f = stage_features_forward(inputs, params).first;
      double total = 0.0;
      for (int i = 0; i < shape.pairs; ++i)
        total += dot(f.x_tilde[i], probe.x_tilde[i]) +
                 dot(f.y_tilde[i], probe.y_tilde[i]);
      return total;
    };

    auto [feats, tape] = stage_features_forward(inputs, params);
    auto [dinputs, grads] = stage_features_backward(tape, params, probe);

    std::vector<double*> p = param_ptrs(params);
    std::vector<double*> gp = param_ptrs(grads);
    for (size_t j = 0; j + 1 < p.size(); ++j)  // last slot is the unused β_x
      cp.add(maybe_corrupt(*gp[j], bad_p), central(loss, p[j], s.opts.step));
    for (size_t ch = 0; ch < inputs.size(); ++ch)
      for (size_t j = 0; j < inputs[ch].data.size(); ++j)
        ci.add(maybe_corrupt(dinputs[ch].data[j], bad_i),
               central(loss, &inputs[ch].data[j], s.opts.step));
  }
  s.report("features/params", cp.rel());
  s.report("features/inputs", ci.rel());
}

// The composed stage (features → taper → kernel quotient → clean-up → image
// quotient), probed on both outputs at once.
void check_stage(Suite& s, Rng& rng) {
  InstanceCheck cp, ci;
  const bool bad_p = s.corrupted("stage/params");
  const bool bad_i = s.corrupted("stage/inputs");
  StageShape shape;
  shape.num_filters = 2;
  shape.filter_size = 3;
  shape.in_channels = 1;
  shape.pairs = 2;
  const double beta_k = 1e-2;
  for (int inst = 0; inst < s.heavy_instances(); ++inst) {
    StageParams params = init_params(shape, rng);
    Image blurry = random_image(12, 12, rng);
    const Image probe_k = random_image(12, 12, rng);
    const Image probe_l = random_image(12, 12, rng);
    auto loss = [&] {
      StageResult r = stage_forward(blurry, nullptr, params, beta_k, 5);
      return dot(r.kernel_raw, probe_k) + dot(r.latent_next, probe_l);
    };

    StageResult r = stage_forward(blurry, nullptr, params, beta_k, 5);
    StageBackResult back = stage_backward(params, r.tape, &probe_k, &probe_l);

    std::vector<double*> p = param_ptrs(params);
    std::vector<double*> gp = param_ptrs(back.grads);
    for (size_t j = 0; j < p.size(); ++j)
      cp.add(maybe_corrupt(*gp[j], bad_p), central(loss, p[j], s.opts.step));
    for (size_t j = 0; j < blurry.data.size(); ++j)
      ci.add(maybe_corrupt(back.delta_blurry.data[j], bad_i),
             central(loss, &blurry.data[j], s.opts.step));
  }
  s.report("stage/params", cp.rel());
  s.report("stage/inputs", ci.rel());
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck(const GradCheckOptions& opts) {
  Rng rng(opts.seed);
  Suite suite{opts, {}};
  check_kernel_estimate(suite, rng);
  check_image_estimate(suite, rng);
  check_postprocess(suite, rng);
  check_features(suite, rng);
  check_stage(suite, rng);
  return suite.rows;
}

bool all_pass(const std::vector<GradCheckRow>& rows) {
  for (const GradCheckRow& r : rows)
    if (!r.pass) return false;
  return true;
}

std::string format_gradcheck(const std::vector<GradCheckRow>& rows) {
  std::string out;
  char line[128];
  for (const GradCheckRow& r : rows) {
    std::snprintf(line, sizeof line, "%-28s max_rel %.3e  tol %.1e  %s\n",
                  r.layer.c_str(), r.max_rel_error, r.tolerance,
                  r.pass ? "pass" : "FAIL");
    out += line;
  }
  out += all_pass(rows) ? "gradcheck: all layers pass\n"
                        : "gradcheck: FAILURES PRESENT\n";
  return out;
}

}  // namespace deblur
