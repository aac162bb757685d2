#include "deblur/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace deblur {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// One cached in-place c2c plan pair per size. FFTW's planner is not
// thread-safe, so creation is locked; fftw_execute_dft on distinct buffers
// is. FFTW_UNALIGNED lets the plans run on any heap buffer.
PlanPair& plans_for(int w, int h) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, PlanPair> cache;

  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({w, h});
  if (it != cache.end()) return it->second;

  std::vector<std::complex<double>> probe(static_cast<size_t>(w) * h);
  auto* p = reinterpret_cast<fftw_complex*>(probe.data());
  PlanPair pp;
  pp.forward = fftw_plan_dft_2d(h, w, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  pp.backward = fftw_plan_dft_2d(h, w, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(std::make_pair(w, h), pp).first->second;
}

}  // namespace

Spectrum::Spectrum(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DimensionError("Spectrum: dimensions must be positive");
  data.assign(static_cast<size_t>(w) * h, {0.0, 0.0});
}

Spectrum fft2(const Image& img) {
  if (img.width <= 0 || img.height <= 0)
    throw DimensionError("fft2: zero-sized input");
  Spectrum spec(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); ++i) spec.data[i] = img.data[i];
  auto* p = reinterpret_cast<fftw_complex*>(spec.data.data());
  fftw_execute_dft(plans_for(img.width, img.height).forward, p, p);
  return spec;
}

Image ifft2(const Spectrum& spec, double* max_imag) {
  if (spec.width <= 0 || spec.height <= 0)
    throw DimensionError("ifft2: zero-sized input");
  std::vector<std::complex<double>> buf = spec.data;
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plans_for(spec.width, spec.height).backward, p, p);

  const double norm = 1.0 / (static_cast<double>(spec.width) * spec.height);
  Image out(spec.width, spec.height);
  double imag = 0.0;
  for (size_t i = 0; i < buf.size(); ++i) {
    out.data[i] = buf[i].real() * norm;
    imag = std::max(imag, std::abs(buf[i].imag()) * norm);
  }
  if (max_imag) *max_imag = imag;
  return out;
}

}  // namespace deblur
