#include "deblur/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace deblur {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

uint16_t quantize(double v, int maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint16_t>(std::lround(c * maxval));
}

// ---- PGM (binary P5, 8- or 16-bit big-endian) ----

void skip_pgm_whitespace(FILE* f) {
  int c;
  while ((c = std::fgetc(f)) != EOF) {
    if (c == '#') {
      while ((c = std::fgetc(f)) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      std::ungetc(c, f);
      return;
    }
  }
}

long read_pgm_int(FILE* f, const std::string& path) {
  skip_pgm_whitespace(f);
  long v;
  if (std::fscanf(f, "%ld", &v) != 1)
    throw IoError("malformed PGM header in '" + path + "'");
  return v;
}

ColorImage read_pgm(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  char magic[3] = {0};
  if (std::fread(magic, 1, 2, f.get()) != 2 || std::strncmp(magic, "P5", 2) != 0)
    throw IoError("'" + path + "' is not a binary PGM (P5) file");
  const long w = read_pgm_int(f.get(), path);
  const long h = read_pgm_int(f.get(), path);
  const long maxval = read_pgm_int(f.get(), path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw IoError("bad PGM dimensions/maxval in '" + path + "'");
  std::fgetc(f.get());  // single whitespace after maxval

  ColorImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.channels = 1;
  img.data.resize(static_cast<size_t>(w) * h);
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<uint8_t> raw(img.data.size() * bytes);
  if (std::fread(raw.data(), 1, raw.size(), f.get()) != raw.size())
    throw IoError("truncated PGM pixel data in '" + path + "'");
  for (size_t i = 0; i < img.data.size(); ++i) {
    const unsigned v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    img.data[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

// ---- PNG via libpng ----

// Throwing across libpng's C frames is safe on this toolchain (the distro
// library carries unwind tables; same approach as png++).
[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) {
  throw IoError(std::string("libpng: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

ColorImage read_png(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warn_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ColorImage img;
  try {
    png_init_io(png, f.get());
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
      png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // little-endian rows below
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (channels != 1 && channels != 3)
      throw IoError("unsupported PNG channel count in '" + path + "'");
    img.channels = channels;
    img.data.resize(static_cast<size_t>(img.width) * img.height * channels);

    const double maxval = depth == 16 ? 65535.0 : 255.0;
    const size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<uint8_t> row(row_bytes);
    for (int y = 0; y < img.height; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (int x = 0; x < img.width * channels; ++x) {
        const unsigned v = depth == 16
                               ? reinterpret_cast<uint16_t*>(row.data())[x]
                               : row[x];
        img.data[static_cast<size_t>(y) * img.width * channels + x] = v / maxval;
      }
    }
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

bool has_png_signature(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  uint8_t sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8) return false;
  return png_sig_cmp(sig, 0, 8) == 0;
}

void write_png_raw(const std::string& path, int width, int height, int channels,
                   const double* data, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw IoError("write_png: bit depth must be 8 or 16");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    const int maxval = bit_depth == 16 ? 65535 : 255;
    const int stride = width * channels;
    std::vector<uint8_t> row(static_cast<size_t>(stride) * (bit_depth / 8));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < stride; ++x) {
        const uint16_t q = quantize(data[static_cast<size_t>(y) * stride + x], maxval);
        if (bit_depth == 16)
          reinterpret_cast<uint16_t*>(row.data())[x] = q;
        else
          row[x] = static_cast<uint8_t>(q);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image luminance(const ColorImage& img) {
  Image out(img.width, img.height);
  if (img.channels == 1) {
    out.data = img.data;
    return out;
  }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                     0.114 * img.at(x, y, 2);
  return out;
}

ColorImage read_image_color(const std::string& path) {
  if (has_png_signature(path)) return read_png(path);
  return read_pgm(path);
}

Image read_image(const std::string& path) {
  return luminance(read_image_color(path));
}

void write_png(const std::string& path, const Image& img, int bit_depth) {
  write_png_raw(path, img.width, img.height, 1, img.data.data(), bit_depth);
}

void write_png(const std::string& path, const ColorImage& img, int bit_depth) {
  write_png_raw(path, img.width, img.height, img.channels, img.data.data(), bit_depth);
}

void write_pgm(const std::string& path, const Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw IoError("write_pgm: bit depth must be 8 or 16");
  FilePtr f = open_file(path, "wb");
  const int maxval = bit_depth == 16 ? 65535 : 255;
  std::fprintf(f.get(), "P5\n%d %d\n%d\n", img.width, img.height, maxval);
  for (double v : img.data) {
    const uint16_t q = quantize(v, maxval);
    if (bit_depth == 16) {
      const uint8_t hi = q >> 8, lo = q & 0xff;
      std::fputc(hi, f.get());
      std::fputc(lo, f.get());
    } else {
      std::fputc(static_cast<int>(q), f.get());
    }
  }
  if (std::ferror(f.get())) throw IoError("write failure on '" + path + "'");
}

}  // namespace deblur
