#include "common.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "deblur/errors.hpp"
#include "deblur/resample.hpp"

namespace fs = std::filesystem;

namespace deblur::cli {

void emit_event(const nlohmann::json& obj) {
  static std::mutex gate;
  std::lock_guard<std::mutex> lock(gate);
  std::cerr << obj.dump() << "\n" << std::flush;
}

std::vector<std::string> list_images(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw IoError("corpus directory '" + dir + "' does not exist");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

void write_kernel_json(const std::string& path, const BlurKernel& kernel) {
  nlohmann::json j;
  j["size"] = kernel.size;
  j["weights"] = kernel.weights;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write kernel file '" + path + "'");
  out << j.dump() << "\n";
}

BlurKernel read_kernel_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read kernel file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
    BlurKernel k(j.at("size").get<int>());
    k.weights = j.at("weights").get<std::vector<double>>();
    if (k.weights.size() != static_cast<size_t>(k.size) * k.size)
      throw IoError("kernel file '" + path + "' has a mismatched weight count");
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("kernel file '" + path + "' is not parseable: " + e.what());
  }
}

std::vector<int> kernel_ladder(int finest) {
  if (finest < 3 || finest % 2 == 0)
    throw ConfigError("kernel size must be odd and ≥ 3, got " +
                      std::to_string(finest));
  std::vector<int> sizes;
  for (int k = 5; k < finest; k = 2 * k - 1) sizes.push_back(k);
  sizes.push_back(finest);
  return sizes;
}

ScalePolicy policy_from_string(const std::string& name) {
  if (name == "kernel-ratio") return ScalePolicy::KernelRatio;
  if (name == "factor-two") return ScalePolicy::FactorTwo;
  throw ConfigError("unknown scale policy '" + name +
                    "' (expected kernel-ratio or factor-two)");
}

ScaleForwardResult run_cascade(const Image& blurry, const MultiScaleModel& model,
                               ScalePolicy policy) {
  ScaleForwardResult result;
  Image warm;
  const Image* warm_ptr = nullptr;
  for (size_t s = 0; s < model.scales.size(); ++s) {
    auto [w, h] = scale_dims(model, s, blurry.width, blurry.height, policy);
    Image obs = (w == blurry.width && h == blurry.height)
                    ? blurry
                    : resize_bilinear(blurry, w, h);
    result = scale_forward(obs, warm_ptr, model.scales[s]);
    if (s + 1 < model.scales.size()) {
      auto [nw, nh] =
          scale_dims(model, s + 1, blurry.width, blurry.height, policy);
      warm = resize_bilinear(result.latent, nw, nh);
      warm_ptr = &warm;
    }
  }
  return result;
}

Image kernel_mosaic(const LocalKernelField& field, const PatchGrid& grid) {
  const int ks = field.kernel_size;
  const int tile = ks + 1;
  Image sheet(grid.nx * tile + 1, grid.ny * tile + 1, 0.0);
  for (int py = 0; py < grid.ny; ++py)
    for (int px = 0; px < grid.nx; ++px) {
      const Image& k = field.kernels[static_cast<size_t>(py) * grid.nx + px];
      const double peak = max_abs(k);
      for (int y = 0; y < ks; ++y)
        for (int x = 0; x < ks; ++x)
          sheet.at(px * tile + 1 + x, py * tile + 1 + y) =
              peak > 0.0 ? std::max(0.0, k.at(x, y)) / peak : 0.0;
    }
  return sheet;
}

}  // namespace deblur::cli
