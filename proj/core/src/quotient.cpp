#include "deblur/quotient.hpp"

#include <complex>

#include "deblur/geometry.hpp"

namespace deblur {

namespace {

using cd = std::complex<double>;

// Center pixel a centered crop of any odd size reads from: (n-1)/2.
int kernel_frame_center(int n) { return (n - 1) / 2; }

void validate_features(const FeatureImages& feats) {
  if (feats.count() == 0 || feats.y_tilde.size() != feats.count())
    throw DimensionError("quotient: feature pair count mismatch");
  const Image& ref = feats.x_tilde[0];
  for (const auto& im : feats.x_tilde)
    if (!im.same_shape(ref)) throw DimensionError("quotient: x_tilde shape mismatch");
  for (const auto& im : feats.y_tilde)
    if (!im.same_shape(ref)) throw DimensionError("quotient: y_tilde shape mismatch");
}

// Shared quotient core: spectra in, N/D accumulators and N/D ratio out.
struct QuotientCore {
  Spectrum numer;
  std::vector<double> denom;
  Spectrum ratio;
};

QuotientCore accumulate_quotient(const std::vector<Spectrum>& fx,
                                 const std::vector<Spectrum>& fy, double beta) {
  const size_t n = fx[0].data.size();
  QuotientCore q;
  q.numer = Spectrum(fx[0].width, fx[0].height);
  q.denom.assign(n, beta);
  for (size_t i = 0; i < fx.size(); ++i)
    for (size_t b = 0; b < n; ++b) {
      q.numer.data[b] += std::conj(fx[i].data[b]) * fy[i].data[b];
      q.denom[b] += std::norm(fx[i].data[b]);
    }
  q.ratio = Spectrum(fx[0].width, fx[0].height);
  for (size_t b = 0; b < n; ++b) q.ratio.data[b] = q.numer.data[b] / q.denom[b];
  return q;
}

// The three Appendix-style gradient pieces shared by both backward passes,
// for one (FX_j, FY_j) pair given G = fft2(delta) of the output gradient.
struct PairGrads {
  Image dx;
  Image dy;
};

PairGrads pair_backward(const QuotientTape& tape, const Spectrum& g,
                        const Spectrum& fx_j, const Spectrum& fy_j) {
  const size_t n = g.data.size();
  Spectrum sx(g.width, g.height), sy(g.width, g.height);
  for (size_t b = 0; b < n; ++b) {
    const double d = tape.denom[b];
    const cd gb = g.data[b];
    // 2·Re(conj(N)⊙G) is real bin-by-bin; it scales FX_j/D².
    const double a = 2.0 * std::real(std::conj(tape.numer.data[b]) * gb);
    sx.data[b] = std::conj(gb) * fy_j.data[b] / d - a * fx_j.data[b] / (d * d);
    sy.data[b] = fx_j.data[b] * gb / d;
  }
  return {ifft2(sx), ifft2(sy)};
}

// Δβ = -⟨ifft2(N/D²), delta⟩ : the denominator enters as 1/D, so its β
// derivative carries a minus sign.
double beta_backward(const QuotientTape& tape, const Image& delta_unshifted) {
  Spectrum nd2(tape.numer.width, tape.numer.height);
  for (size_t b = 0; b < nd2.data.size(); ++b)
    nd2.data[b] = tape.numer.data[b] / (tape.denom[b] * tape.denom[b]);
  return -dot(ifft2(nd2), delta_unshifted);
}

}  // namespace

std::pair<Image, QuotientTape> kernel_estimate_forward(const FeatureImages& feats,
                                                       double beta_k) {
  validate_features(feats);
  if (beta_k <= 0.0) throw NumericError("kernel_estimate_forward: beta_k must be > 0");

  QuotientTape tape;
  tape.beta = beta_k;
  for (const auto& im : feats.x_tilde) tape.fx.push_back(fft2(im));
  for (const auto& im : feats.y_tilde) tape.fy.push_back(fft2(im));

  QuotientCore q = accumulate_quotient(tape.fx, tape.fy, beta_k);
  tape.numer = std::move(q.numer);
  tape.denom = std::move(q.denom);

  const Image raw = ifft2(q.ratio);
  tape.shift_x = kernel_frame_center(raw.width);
  tape.shift_y = kernel_frame_center(raw.height);
  return {circular_shift(raw, tape.shift_x, tape.shift_y), tape};
}

KernelEstimateGrads kernel_estimate_backward(const QuotientTape& tape,
                                             const Image& delta_k) {
  if (delta_k.width != tape.numer.width || delta_k.height != tape.numer.height)
    throw DimensionError("kernel_estimate_backward: delta shape mismatch");

  const Image delta_raw = circular_shift(delta_k, -tape.shift_x, -tape.shift_y);
  const Spectrum g = fft2(delta_raw);

  KernelEstimateGrads grads;
  for (size_t j = 0; j < tape.fx.size(); ++j) {
    PairGrads pg = pair_backward(tape, g, tape.fx[j], tape.fy[j]);
    grads.delta_x_tilde.push_back(std::move(pg.dx));
    grads.delta_y_tilde.push_back(std::move(pg.dy));
  }
  grads.delta_beta_k = beta_backward(tape, delta_raw);
  return grads;
}

std::pair<Image, QuotientTape> image_estimate_forward(const BlurKernel& kernel,
                                                      const Image& y, double beta_x) {
  if (kernel.size > std::min(y.width, y.height))
    throw DimensionError("image_estimate_forward: kernel larger than image");
  if (beta_x <= 0.0) throw NumericError("image_estimate_forward: beta_x must be > 0");

  QuotientTape tape;
  tape.beta = beta_x;
  tape.kernel_size = kernel.size;
  tape.fx.push_back(fft2(embed_kernel_at_origin(kernel, y.width, y.height)));
  tape.fy.push_back(fft2(y));

  QuotientCore q = accumulate_quotient(tape.fx, tape.fy, beta_x);
  tape.numer = std::move(q.numer);
  tape.denom = std::move(q.denom);
  return {ifft2(q.ratio), tape};
}

ImageEstimateGrads image_estimate_backward(const QuotientTape& tape,
                                           const Image& delta_x) {
  if (delta_x.width != tape.numer.width || delta_x.height != tape.numer.height)
    throw DimensionError("image_estimate_backward: delta shape mismatch");

  const Spectrum g = fft2(delta_x);
  PairGrads pg = pair_backward(tape, g, tape.fx[0], tape.fy[0]);

  ImageEstimateGrads grads;
  grads.delta_kernel = gather_kernel_from_origin(pg.dx, tape.kernel_size);
  grads.delta_y = std::move(pg.dy);
  grads.delta_beta_x = beta_backward(tape, delta_x);
  return grads;
}

}  // namespace deblur
