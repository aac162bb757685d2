#include <doctest.h>

#include <cmath>

#include "deblur/errors.hpp"
#include "deblur/eval.hpp"
#include "deblur/rng.hpp"
#include "test_oracles.hpp"

using namespace deblur;

namespace {

MultiScaleModel tiny_model() {
  Rng rng(130);
  StageShape sh;
  sh.num_filters = 2;
  sh.filter_size = 3;
  sh.pairs = 2;
  MultiScaleModel m;
  ScaleNetwork net;
  net.kernel_size = 5;
  net.stages.push_back(init_params(sh, rng));
  m.scales.push_back(std::move(net));
  return m;
}

}  // namespace

TEST_CASE("kernel_mse is zero for identical kernels") {
  Rng rng(131);
  BlurKernel k = oracle::random_simplex_kernel(7, rng);
  CHECK(kernel_mse(k, k) == 0.0);
}

TEST_CASE("kernel_mse of delta vs uniform 3x3 matches hand arithmetic") {
  BlurKernel uniform(3);
  for (double& w : uniform.weights) w = 1.0 / 9.0;
  const double expect = 72.0 / 729.0;  // ((1−1/9)² + 8·(1/9)²) / 9
  CHECK(kernel_mse(identity_kernel(3), uniform) ==
        doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("kernel_mse forgives whole-pixel shifts") {
  BlurKernel a(7), b(7);
  a.at(2, 3) = 0.6;
  a.at(3, 3) = 0.4;
  b.at(3, 4) = 0.6;  // same blob, one pixel right and down
  b.at(4, 4) = 0.4;
  CHECK(kernel_mse(a, b) < 1e-30);
  CHECK(kernel_mse(b, a) < 1e-30);
}

TEST_CASE("kernel_mse is symmetric and size-tolerant") {
  Rng rng(132);
  BlurKernel small_k = oracle::random_simplex_kernel(5, rng);
  BlurKernel big_k = oracle::random_simplex_kernel(9, rng);
  CHECK(kernel_mse(small_k, big_k) == doctest::Approx(kernel_mse(big_k, small_k)));
  CHECK(kernel_mse(identity_kernel(3), identity_kernel(9)) < 1e-30);
}

TEST_CASE("psnr follows its definition") {
  Image a(8, 8, 0.0), b(8, 8, 0.1);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));  // MSE 0.01

  SUBCASE("identical images hit the infinity sentinel") {
    CHECK(std::isinf(psnr(a, a)));
  }
  SUBCASE("constant offsets leave PSNR unchanged") {
    Rng rng(133);
    Image x = oracle::random_image(9, 7, rng);
    Image y = oracle::random_image(9, 7, rng);
    Image xs = x, ys = y;
    for (auto& v : xs.data) v += 0.25;
    for (auto& v : ys.data) v += 0.25;
    CHECK(psnr(x, y) == doctest::Approx(psnr(xs, ys)).epsilon(1e-12));
  }
  SUBCASE("random pairs match a direct recomputation") {
    Rng rng(134);
    for (int t = 0; t < 5; ++t) {
      Image x = oracle::random_image(6, 6, rng);
      Image y = oracle::random_image(6, 6, rng);
      double sq = 0.0;
      for (size_t i = 0; i < x.data.size(); ++i)
        sq += (x.data[i] - y.data[i]) * (x.data[i] - y.data[i]);
      const double mse = sq / static_cast<double>(x.data.size());
      CHECK(psnr(x, y) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
    }
  }
  SUBCASE("shape mismatches are refused") {
    CHECK_THROWS_AS(psnr(a, Image(4, 4, 0.0)), DimensionError);
  }
}

TEST_CASE("interior psnr ignores border damage") {
  Image a(12, 12, 0.5), b(12, 12, 0.5);
  for (int x = 0; x < 12; ++x) b.at(x, 0) = 0.9;  // damage the top row only
  CHECK(std::isfinite(psnr(a, b)));
  CHECK(std::isinf(psnr_interior(a, b, 2)));
  CHECK_THROWS_AS(psnr_interior(a, b, 6), DimensionError);
}

TEST_CASE("runtime table has one row per requested cell") {
  MultiScaleModel m = tiny_model();
  auto cells = runtime_table(m, {{16, 5}, {24, 5}}, 3);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].image_dim == 16);
  CHECK(cells[1].image_dim == 24);
  for (const auto& c : cells) CHECK(c.median_ms > 0.0);

  const std::string text = format_runtime_table(cells);
  CHECK(text.find("median_ms") != std::string::npos);
  const std::string csv = runtime_table_csv(cells);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
}

TEST_CASE("fnv1a matches published test vectors") {
  CHECK(fnv1a_hash("") == 14695981039346656037ull);
  CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash("foobar") == 0x85944171f73967e8ull);
}
