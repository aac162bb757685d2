#pragma once

#include <vector>

#include "deblur/image.hpp"
#include "deblur/rng.hpp"

namespace deblur {

// Camera-shake trajectory sampler: x- and y-coordinates are independent
// zero-mean Gaussian-process draws over t ∈ [0,1] with the Matérn-5/2
// covariance k(Δ) = σ_f²·(1 + √5|Δ|/l + 5Δ²/(3l²))·exp(−√5|Δ|/l).
struct TrajectoryConfig {
  double length_scale = 0.3;
  double signal_std = 0.25;
  int num_samples = 256;
};

struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
};

double matern_covariance(double delta, double length_scale, double signal_std);

// Draws first all x- then all y-coordinates through a cached Cholesky factor
// of the covariance over linspace(0,1,num_samples). The factorization starts
// with 1e-10 diagonal jitter and escalates tenfold on failure; running out of
// escalations raises NumericError.
std::vector<TrajectoryPoint> sample_trajectory(const TrajectoryConfig& cfg, Rng& rng);

// Renders a trajectory as a PSF: the path is centered on its mean, scaled
// isotropically so it fits the kernel with a 1-pixel margin, and deposited as
// equal-mass bilinear splats along 4 interpolation sub-steps per segment.
// Splatting preserves first moments, so the center of mass lands on the
// central pixel. A zero-extent path degrades to the delta kernel.
BlurKernel rasterize_kernel(const std::vector<TrajectoryPoint>& path, int kernel_size);

// Texture-poor crops make the kernel unidentifiable. Reject (true) when fewer
// than 6% of forward-difference sites have both |∂x| ≥ 0.05 and |∂y| ≥ 0.05;
// exactly 6% is still accepted.
bool reject_flat(const Image& sharp);

// One supervised example: y = k * x + n with i.i.d. Gaussian pixel noise.
struct BlurSample {
  Image sharp;
  BlurKernel kernel;
  Image blurry;
  double noise_sigma = 0.0;
};

// Crops crop_size² at a uniform random position (source must be at least that
// large), blurs circularly, and adds N(0, noise_sigma²) per pixel. No noise
// values are drawn when noise_sigma == 0.
BlurSample make_sample(const Image& sharp_source, const BlurKernel& kernel,
                       double noise_sigma, Rng& rng, int crop_size = 256);

// Procedural stand-in for a natural-image corpus: band-limited sinusoid
// mixture plus random soft-edged rectangles, normalized to [0,1]. Busy enough
// to pass reject_flat at any reasonable size.
Image synth_texture(int width, int height, Rng& rng);

}  // namespace deblur
