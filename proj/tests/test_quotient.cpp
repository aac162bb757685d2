#include <doctest.h>

#include <cmath>

#include "deblur/convolve.hpp"
#include "deblur/geometry.hpp"
#include "deblur/quotient.hpp"
#include "deblur/rng.hpp"
#include "test_oracles.hpp"

using namespace deblur;

namespace {

// Kernel with a dominant center tap: |spectrum| >= 0.2 everywhere, so the
// exact-inversion cases are well-posed.
BlurKernel full_spectrum_kernel(int size, Rng& rng) {
  BlurKernel k = oracle::random_simplex_kernel(size, rng);
  for (auto& v : k.weights) v *= 0.4;
  k.at(size / 2, size / 2) += 0.6;
  return k;
}

FeatureImages random_features(int dim, int count, Rng& rng) {
  FeatureImages f;
  for (int i = 0; i < count; ++i) {
    f.x_tilde.push_back(oracle::random_image(dim, dim, rng, -0.5, 1.0));
    f.y_tilde.push_back(oracle::random_image(dim, dim, rng, -0.5, 1.0));
  }
  return f;
}

double reduce(const Image& out, const Image& g) { return dot(out, g); }

}  // namespace

TEST_CASE("kernel_estimate recovers the exact kernel as beta vanishes") {
  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const int ks = 5;
    Image sharp = oracle::random_image(16, 16, rng, 0.1, 1.0);
    BlurKernel truth = oracle::random_simplex_kernel(ks, rng);
    FeatureImages f;
    f.x_tilde = {sharp};
    f.y_tilde = {convolve_circular(sharp, truth)};
    auto [raw, tape] = kernel_estimate_forward(f, 1e-12);
    Image rec = crop_center(raw, ks, ks);
    CHECK(oracle::max_abs_diff(rec, to_image(truth)) < 1e-6);
  }
}

TEST_CASE("zero blurry-side features give a zero kernel image") {
  Rng rng(32);
  FeatureImages f;
  f.x_tilde = {oracle::random_image(8, 8, rng)};
  f.y_tilde = {Image(8, 8, 0.0)};
  auto [raw, tape] = kernel_estimate_forward(f, 1e-4);
  CHECK(max_abs(raw) < 1e-15);
}

TEST_CASE("kernel_estimate denominator stays above beta and output is real") {
  Rng rng(33);
  FeatureImages f = random_features(12, 2, rng);
  auto [raw, tape] = kernel_estimate_forward(f, 1e-4);
  for (double d : tape.denom) CHECK(d >= 1e-4);

  // imaginary residue of the quotient spectrum's inverse transform
  Spectrum ratio(12, 12);
  for (size_t b = 0; b < ratio.data.size(); ++b)
    ratio.data[b] = tape.numer.data[b] / tape.denom[b];
  double residue = 0.0;
  ifft2(ratio, &residue);
  CHECK(residue < 1e-9);
}

TEST_CASE("kernel_estimate_backward matches central finite differences") {
  Rng rng(34);
  const int dim = 12, count = 2;
  const double h = 1e-5, beta = 1e-4;
  for (int trial = 0; trial < 3; ++trial) {
    FeatureImages f = random_features(dim, count, rng);
    Image g = oracle::random_image(dim, dim, rng, -1.0, 1.0);

    auto [out, tape] = kernel_estimate_forward(f, beta);
    KernelEstimateGrads an = kernel_estimate_backward(tape, g);

    std::vector<double> analytic, numeric;
    for (int j = 0; j < count; ++j)
      for (size_t i = 0; i < f.x_tilde[j].data.size(); ++i) {
        analytic.push_back(an.delta_x_tilde[j].data[i]);
        FeatureImages fp = f;
        fp.x_tilde[j].data[i] += h;
        FeatureImages fm = f;
        fm.x_tilde[j].data[i] -= h;
        numeric.push_back((reduce(kernel_estimate_forward(fp, beta).first, g) -
                           reduce(kernel_estimate_forward(fm, beta).first, g)) /
                          (2 * h));
      }
    CHECK(oracle::rel_error_inf(analytic, numeric) < 1e-4);

    analytic.clear();
    numeric.clear();
    for (int j = 0; j < count; ++j)
      for (size_t i = 0; i < f.y_tilde[j].data.size(); ++i) {
        analytic.push_back(an.delta_y_tilde[j].data[i]);
        FeatureImages fp = f;
        fp.y_tilde[j].data[i] += h;
        FeatureImages fm = f;
        fm.y_tilde[j].data[i] -= h;
        numeric.push_back((reduce(kernel_estimate_forward(fp, beta).first, g) -
                           reduce(kernel_estimate_forward(fm, beta).first, g)) /
                          (2 * h));
      }
    CHECK(oracle::rel_error_inf(analytic, numeric) < 1e-4);

    const double fd_beta = (reduce(kernel_estimate_forward(f, beta + h).first, g) -
                            reduce(kernel_estimate_forward(f, beta - h).first, g)) /
                           (2 * h);
    CHECK(oracle::rel_error_inf({an.delta_beta_k}, {fd_beta}) < 1e-4);
  }
}

TEST_CASE("kernel_estimate_backward of a zero delta is zero") {
  Rng rng(35);
  FeatureImages f = random_features(10, 2, rng);
  auto [out, tape] = kernel_estimate_forward(f, 1e-4);
  KernelEstimateGrads g = kernel_estimate_backward(tape, Image(10, 10, 0.0));
  for (const auto& im : g.delta_x_tilde) CHECK(max_abs(im) == 0.0);
  for (const auto& im : g.delta_y_tilde) CHECK(max_abs(im) == 0.0);
  CHECK(g.delta_beta_k == 0.0);
}

TEST_CASE("delta_beta_k is negative when delta aligns with the output") {
  // Count 1, impulse x: the quotient magnitude shrinks as beta grows, so a
  // positively aligned loss gradient must push beta down.
  Image impulse(8, 8, 0.0);
  impulse.at(0, 0) = 1.0;
  Rng rng(36);
  FeatureImages f;
  f.x_tilde = {impulse};
  f.y_tilde = {oracle::random_image(8, 8, rng, 0.1, 1.0)};
  auto [out, tape] = kernel_estimate_forward(f, 10.0);
  KernelEstimateGrads g = kernel_estimate_backward(tape, out);
  CHECK(g.delta_beta_k < 0.0);
}

TEST_CASE("kernel_estimate shape errors") {
  Rng rng(37);
  FeatureImages f;
  f.x_tilde = {oracle::random_image(8, 8, rng)};
  f.y_tilde = {oracle::random_image(8, 6, rng)};
  CHECK_THROWS_AS(kernel_estimate_forward(f, 1e-4), DimensionError);
  FeatureImages empty;
  CHECK_THROWS_AS(kernel_estimate_forward(empty, 1e-4), DimensionError);
  FeatureImages ok;
  ok.x_tilde = {oracle::random_image(8, 8, rng)};
  ok.y_tilde = {oracle::random_image(8, 8, rng)};
  auto [out, tape] = kernel_estimate_forward(ok, 1e-4);
  CHECK_THROWS_AS(kernel_estimate_backward(tape, Image(6, 6, 0.0)), DimensionError);
}

TEST_CASE("image_estimate with the identity kernel returns the input") {
  Rng rng(38);
  Image y = oracle::random_image(12, 10, rng);
  auto [x, tape] = image_estimate_forward(identity_kernel(3), y, 1e-12);
  CHECK(oracle::max_abs_diff(x, y) < 1e-8);
}

TEST_CASE("image_estimate inverts a full-spectrum blur exactly") {
  Rng rng(39);
  Image x = oracle::random_image(14, 14, rng, 0.1, 1.0);
  BlurKernel k = full_spectrum_kernel(5, rng);
  Image y = convolve_circular(x, k);
  auto [rec, tape] = image_estimate_forward(k, y, 1e-12);
  CHECK(oracle::max_abs_diff(rec, x) < 1e-6);
}

TEST_CASE("large beta_x shrinks the estimate strongly") {
  Rng rng(40);
  Image y = oracle::random_image(12, 12, rng, 0.2, 1.0);
  auto [x, tape] = image_estimate_forward(identity_kernel(3), y, 1e3);
  CHECK(std::sqrt(dot(x, x)) < 0.01 * std::sqrt(dot(y, y)));
}

TEST_CASE("image_estimate_backward matches central finite differences") {
  Rng rng(41);
  const int dim = 12, ks = 5;
  const double h = 1e-5, beta = 0.05;
  Image y = oracle::random_image(dim, dim, rng, 0.0, 1.0);
  BlurKernel k = full_spectrum_kernel(ks, rng);
  Image g = oracle::random_image(dim, dim, rng, -1.0, 1.0);

  auto [x, tape] = image_estimate_forward(k, y, beta);
  ImageEstimateGrads an = image_estimate_backward(tape, g);

  std::vector<double> analytic, numeric;
  for (size_t i = 0; i < k.weights.size(); ++i) {
    analytic.push_back(an.delta_kernel.data[i]);
    BlurKernel kp = k;
    kp.weights[i] += h;
    BlurKernel km = k;
    km.weights[i] -= h;
    numeric.push_back((reduce(image_estimate_forward(kp, y, beta).first, g) -
                       reduce(image_estimate_forward(km, y, beta).first, g)) /
                      (2 * h));
  }
  CHECK(oracle::rel_error_inf(analytic, numeric) < 1e-4);

  analytic.clear();
  numeric.clear();
  for (size_t i = 0; i < y.data.size(); ++i) {
    analytic.push_back(an.delta_y.data[i]);
    Image yp = y;
    yp.data[i] += h;
    Image ym = y;
    ym.data[i] -= h;
    numeric.push_back((reduce(image_estimate_forward(k, yp, beta).first, g) -
                       reduce(image_estimate_forward(k, ym, beta).first, g)) /
                      (2 * h));
  }
  CHECK(oracle::rel_error_inf(analytic, numeric) < 1e-4);

  const double fd_beta = (reduce(image_estimate_forward(k, y, beta + h).first, g) -
                          reduce(image_estimate_forward(k, y, beta - h).first, g)) /
                         (2 * h);
  CHECK(oracle::rel_error_inf({an.delta_beta_x}, {fd_beta}) < 1e-4);
}

TEST_CASE("image_estimate identity-kernel adjoint passes delta through") {
  Rng rng(42);
  Image y = oracle::random_image(10, 10, rng);
  auto [x, tape] = image_estimate_forward(identity_kernel(3), y, 1e-12);
  Image d = oracle::random_image(10, 10, rng, -1.0, 1.0);
  ImageEstimateGrads g = image_estimate_backward(tape, d);
  CHECK(oracle::max_abs_diff(g.delta_y, d) < 1e-8);
}

TEST_CASE("image_estimate_backward of zero delta is zero") {
  Rng rng(43);
  Image y = oracle::random_image(9, 9, rng);
  auto [x, tape] = image_estimate_forward(identity_kernel(3), y, 0.1);
  ImageEstimateGrads g = image_estimate_backward(tape, Image(9, 9, 0.0));
  CHECK(max_abs(g.delta_kernel) == 0.0);
  CHECK(max_abs(g.delta_y) == 0.0);
  CHECK(g.delta_beta_x == 0.0);
}

TEST_CASE("image_estimate rejects oversized kernels") {
  Image y(4, 4, 0.5);
  CHECK_THROWS_AS(image_estimate_forward(identity_kernel(5), y, 0.1), DimensionError);
}
