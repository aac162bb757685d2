#pragma once

#include <string>
#include <vector>

#include "deblur/image.hpp"

namespace deblur {

// Interleaved multi-channel raster in [0,1]; channels is 1 or 3.
struct ColorImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

Image luminance(const ColorImage& img);  // Rec.601 weights for 3 channels

// Readers sniff the format (PNG signature / PGM "P5"); 8- and 16-bit depths
// map linearly to [0,1]. Color PNGs collapse to luminance in read_image.
Image read_image(const std::string& path);
ColorImage read_image_color(const std::string& path);

// Writers clamp to [0,1] and quantize. bit_depth is 8 or 16.
void write_png(const std::string& path, const Image& img, int bit_depth = 8);
void write_png(const std::string& path, const ColorImage& img, int bit_depth = 8);
void write_pgm(const std::string& path, const Image& img, int bit_depth = 8);

}  // namespace deblur
