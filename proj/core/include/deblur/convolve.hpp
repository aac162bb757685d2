#pragma once

#include "deblur/fft.hpp"
#include "deblur/image.hpp"

namespace deblur {

// Circular convolution with a centered kernel:
//   out(p) = Σ_d ker(d + r) · img((p - d) mod dims),  d ∈ [-r, r]².
// Computed in the Fourier domain (the kernel is origin-embedded first), so
// it introduces no net translation. Kernel must fit inside the image.
Image convolve_circular(const Image& img, const BlurKernel& ker);

// Spatial-domain variant for small learned filters (odd square Image taps).
// Exact arithmetic — this is the primitive the filter gradients differentiate.
Image filter_circular(const Image& img, const Image& taps);

// Adjoint of filter_circular w.r.t. the image: circular cross-correlation of
// delta_out with the same taps.
Image filter_circular_adjoint_image(const Image& delta_out, const Image& taps);

// Adjoint w.r.t. the taps: grad(d + r) = Σ_p delta_out(p) · img((p - d) mod dims).
Image filter_circular_adjoint_taps(const Image& delta_out, const Image& img,
                                   int filter_size);

}  // namespace deblur
