#pragma once

#include <utility>
#include <vector>

#include "deblur/fft.hpp"
#include "deblur/image.hpp"

namespace deblur {

// Paired feature images: x_tilde on the latent side, y_tilde on the blurry
// side, equal count and dimensions. Callers taper borders before handing
// them to the kernel quotient.
struct FeatureImages {
  std::vector<Image> x_tilde;
  std::vector<Image> y_tilde;

  size_t count() const { return x_tilde.size(); }
};

// Everything the backward pass needs from a quotient forward: the operand
// spectra, the accumulated numerator Σ conj(FX_i)⊙FY_i, the strictly
// positive real denominator Σ|FX_i|² + β, and the output shift that moved
// the kernel from the origin frame to the image center.
struct QuotientTape {
  std::vector<Spectrum> fx;
  std::vector<Spectrum> fy;
  Spectrum numer;
  std::vector<double> denom;
  double beta = 0.0;
  int shift_x = 0;
  int shift_y = 0;
  int kernel_size = 0;  // image-estimate tapes only: support of the PSF operand
};

struct KernelEstimateGrads {
  std::vector<Image> delta_x_tilde;
  std::vector<Image> delta_y_tilde;
  double delta_beta_k = 0.0;
};

struct ImageEstimateGrads {
  Image delta_kernel;  // kernel_size × kernel_size, gradient w.r.t. the PSF taps
  Image delta_y;
  double delta_beta_x = 0.0;
};

// One-step Tikhonov kernel estimate:
//   k = ifft2( Σ_i conj(FX_i)⊙FY_i / (Σ_i |FX_i|² + beta_k) ),
// returned as a full-size real image, circularly shifted so the kernel mass
// sits at the frame center (where a centered crop expects it).
std::pair<Image, QuotientTape> kernel_estimate_forward(const FeatureImages& feats,
                                                       double beta_k);

// Gradients of the kernel estimate w.r.t. both feature stacks and beta_k.
// With G = fft2 of the unshifted output gradient, N/D the cached quotient:
//   Δx_j = ifft2( conj(G)⊙FY_j / D  -  2·Re(conj(N)⊙G)⊙FX_j / D² )
//   Δy_j = ifft2( FX_j ⊙ G / D )
//   Δβ_k = -⟨ ifft2(N / D²), Δk ⟩
KernelEstimateGrads kernel_estimate_backward(const QuotientTape& tape,
                                             const Image& delta_k);

// One-step Tikhonov image estimate x = ifft2( conj(FK)⊙FY / (|FK|² + beta_x) )
// with the kernel origin-embedded; same quotient with the roles
// (x_tilde → kernel, y_tilde → blurry) and count 1.
std::pair<Image, QuotientTape> image_estimate_forward(const BlurKernel& kernel,
                                                      const Image& y, double beta_x);

ImageEstimateGrads image_estimate_backward(const QuotientTape& tape,
                                           const Image& delta_x);

}  // namespace deblur
