#include <filesystem>
#include <fstream>
#include <map>

#include "common.hpp"
#include "deblur/blur_synth.hpp"
#include "deblur/errors.hpp"
#include "deblur/image_io.hpp"
#include "deblur/rng.hpp"

namespace fs = std::filesystem;

namespace deblur::cli {

int run_synth(const RunConfig& cfg) {
  const auto& sc = cfg.synth;
  if (sc.corpus.empty())
    throw ConfigError("synth requires a corpus directory (--corpus)");
  if (sc.count <= 0) throw ConfigError("synth sample count must be positive");

  std::vector<std::string> paths = list_images(sc.corpus);
  if (paths.empty())
    throw ConfigError("corpus '" + sc.corpus + "' contains no PNG/PGM images");

  // Undersized sources can never provide a crop; drop them up front so the
  // rejection loop only sees content-based rejections.
  std::vector<Image> sources;
  std::vector<std::string> used;
  for (const std::string& p : paths) {
    Image img = read_image(p);
    if (img.width >= sc.crop && img.height >= sc.crop) {
      sources.push_back(std::move(img));
      used.push_back(p);
    }
  }
  if (sources.empty())
    throw ConfigError("no corpus image is at least " + std::to_string(sc.crop) +
                      "×" + std::to_string(sc.crop));

  fs::create_directories(sc.out_dir);
  Rng rng(sc.seed);
  TrajectoryConfig traj;
  traj.length_scale = sc.length_scale;
  traj.signal_std = sc.signal_std;
  traj.num_samples = sc.trajectory_samples;

  nlohmann::json samples = nlohmann::json::array();
  int accepted = 0, rejected = 0;
  const long attempt_cap = 200L * sc.count;
  for (long attempt = 0; accepted < sc.count; ++attempt) {
    if (attempt >= attempt_cap)
      throw ConfigError("corpus too flat: " + std::to_string(rejected) +
                        " of " + std::to_string(attempt) + " crops rejected");

    const Image& src = sources[rng.integer(sources.size())];
    BlurKernel kernel = rasterize_kernel(sample_trajectory(traj, rng), sc.kernel_size);
    BlurSample sample = make_sample(src, kernel, sc.noise_sigma, rng, sc.crop);
    if (reject_flat(sample.sharp)) {
      ++rejected;
      continue;
    }

    char id[32];
    std::snprintf(id, sizeof id, "sample_%05d", accepted);
    const std::string sharp_name = std::string(id) + "_sharp.png";
    const std::string blurry_name = std::string(id) + "_blurry.png";
    const std::string kernel_name = std::string(id) + "_kernel.json";
    write_png((fs::path(sc.out_dir) / sharp_name).string(), sample.sharp, 16);
    write_png((fs::path(sc.out_dir) / blurry_name).string(), sample.blurry, 16);
    write_kernel_json((fs::path(sc.out_dir) / kernel_name).string(), sample.kernel);

    samples.push_back({{"id", id},
                       {"sharp", sharp_name},
                       {"blurry", blurry_name},
                       {"kernel", kernel_name}});
    ++accepted;
    if (!cfg.run.quiet && cfg.run.progress_every > 0 &&
        accepted % std::max(1, cfg.run.progress_every) == 0)
      emit_event({{"event", "progress"},
                  {"phase", "synth"},
                  {"accepted", accepted},
                  {"rejected", rejected}});
  }

  const double reject_rate =
      rejected == 0 ? 0.0
                    : static_cast<double>(rejected) / (accepted + rejected);
  nlohmann::json manifest = {
      {"kernel_size", sc.kernel_size},
      {"crop", sc.crop},
      {"noise_sigma", sc.noise_sigma},
      {"seed", sc.seed},
      {"count", accepted},
      {"corpus", sc.corpus},
      {"corpus_images", used},
      {"config_hash", config_hash(cfg)},
      {"stats",
       {{"accepted", accepted},
        {"rejected", rejected},
        {"reject_rate", reject_rate}}},
      {"samples", samples}};

  const std::string manifest_path = (fs::path(sc.out_dir) / "manifest.json").string();
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + manifest_path + "'");
  out << manifest.dump(2) << "\n";
  save_config(cfg, (fs::path(sc.out_dir) / "effective.ini").string());

  if (!cfg.run.quiet)
    emit_event({{"event", "synth_done"},
                {"accepted", accepted},
                {"rejected", rejected},
                {"reject_rate", reject_rate},
                {"manifest", manifest_path}});
  return 0;
}

}  // namespace deblur::cli
