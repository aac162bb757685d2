// Microbenchmarks for the hot paths: the FFT (including non-power-of-two
// sizes, which FFTW handles with different plans), circular convolution, the
// two quotient layers, and a full stage pass at the shapes the runtime table
// reports. Run manually: build/benchmarks/deblur_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "deblur/convolve.hpp"
#include "deblur/feature_net.hpp"
#include "deblur/fft.hpp"
#include "deblur/image.hpp"
#include "deblur/pipeline.hpp"
#include "deblur/quotient.hpp"
#include "deblur/rng.hpp"

using namespace deblur;

namespace {

Image random_image(int w, int h, uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

BlurKernel random_kernel(int size, uint64_t seed) {
  Rng rng(seed);
  BlurKernel k(size);
  double s = 0.0;
  for (auto& v : k.weights) s += v = rng.uniform();
  for (auto& v : k.weights) v /= s;
  return k;
}

FeatureImages random_features(int dim, int count, uint64_t seed) {
  FeatureImages f;
  for (int i = 0; i < count; ++i) {
    f.x_tilde.push_back(random_image(dim, dim, seed + 2 * static_cast<uint64_t>(i)));
    f.y_tilde.push_back(random_image(dim, dim, seed + 2 * static_cast<uint64_t>(i) + 1));
  }
  return f;
}

}  // namespace

static void BM_fft2(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Image img = random_image(dim, dim, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fft2(img));
}
BENCHMARK(BM_fft2)->Arg(127)->Arg(128)->Arg(255)->Arg(256)->Arg(511)->Arg(512);

static void BM_fft_roundtrip(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Image img = random_image(dim, dim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ifft2(fft2(img)));
}
BENCHMARK(BM_fft_roundtrip)->Arg(255)->Arg(511);

static void BM_convolve_circular(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Image img = random_image(dim, dim, 3);
  const BlurKernel k = random_kernel(17, 4);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_circular(img, k));
}
BENCHMARK(BM_convolve_circular)->Arg(127)->Arg(255)->Arg(511);

static void BM_filter_circular(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Image img = random_image(dim, dim, 5);
  const Image taps = random_image(7, 7, 6);
  for (auto _ : state) benchmark::DoNotOptimize(filter_circular(img, taps));
}
BENCHMARK(BM_filter_circular)->Arg(127)->Arg(255)->Arg(511);

static void BM_kernel_estimate(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const FeatureImages f = random_features(dim, 2, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_estimate_forward(f, 1e-4));
}
BENCHMARK(BM_kernel_estimate)->Arg(127)->Arg(255)->Arg(511);

static void BM_image_estimate(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const Image y = random_image(dim, dim, 8);
  const BlurKernel k = random_kernel(17, 9);
  for (auto _ : state) benchmark::DoNotOptimize(image_estimate_forward(k, y, 1e-2));
}
BENCHMARK(BM_image_estimate)->Arg(127)->Arg(255)->Arg(511);

static void BM_kernel_postprocess(benchmark::State& state) {
  const Image raw = random_image(255, 255, 10);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_postprocess(raw, 17));
}
BENCHMARK(BM_kernel_postprocess);

// One full stage (32 filters of 7x7, two feature pairs) at the image sizes
// the runtime table reports; this is the unit the end-to-end estimate repeats
// per stage and per scale.
static void BM_stage_forward(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  Rng rng(11);
  StageShape sh;
  sh.num_filters = 32;
  sh.filter_size = 7;
  sh.in_channels = 1;
  sh.hidden_blocks = 1;
  sh.pairs = 2;
  const StageParams params = init_params(sh, rng);
  const Image blurry = random_image(dim, dim, 12);
  for (auto _ : state)
    benchmark::DoNotOptimize(stage_forward(blurry, nullptr, params, 1e-4, 17));
}
BENCHMARK(BM_stage_forward)->Arg(127)->Arg(255)->Arg(511)->Unit(benchmark::kMillisecond);

// The distribution's static benchmark_main archive ships LTO bytecode from a
// mismatched compiler, so the entry point lives here and only the shared
// library is linked.
BENCHMARK_MAIN();
