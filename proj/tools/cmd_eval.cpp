#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "common.hpp"
#include "deblur/errors.hpp"
#include "deblur/eval.hpp"
#include "deblur/image_io.hpp"
#include "deblur/model_io.hpp"

namespace fs = std::filesystem;

namespace deblur::cli {

namespace {

nlohmann::json load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest '" + path + "' is not parseable: " + e.what());
  }
}

// Gate file: `metric = bound` lines, same comment rules as the main config.
struct Thresholds {
  double max_mean_kernel_mse = HUGE_VAL;
  double min_mean_psnr_db = -HUGE_VAL;
  double max_mean_estimate_ms = HUGE_VAL;
  double max_kernel_mse = HUGE_VAL;
  double min_psnr_db = -HUGE_VAL;
};

Thresholds load_thresholds(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read thresholds file '" + path + "'");
  Thresholds t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == ';')
      continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("thresholds line " + std::to_string(lineno) +
                        ": expected 'metric = bound'");
    auto trim = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t\r");
      const size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    double value = 0.0;
    try {
      value = std::stod(trim(line.substr(eq + 1)));
    } catch (const std::exception&) {
      throw ConfigError("thresholds line " + std::to_string(lineno) +
                        ": bound is not a number");
    }
    if (key == "max_mean_kernel_mse")
      t.max_mean_kernel_mse = value;
    else if (key == "min_mean_psnr_db")
      t.min_mean_psnr_db = value;
    else if (key == "max_mean_estimate_ms")
      t.max_mean_estimate_ms = value;
    else if (key == "max_kernel_mse")
      t.max_kernel_mse = value;
    else if (key == "min_psnr_db")
      t.min_psnr_db = value;
    else
      throw ConfigError("thresholds line " + std::to_string(lineno) +
                        ": unknown metric '" + key + "'");
  }
  return t;
}

std::string csv_row(const EvalRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.3f,%.3f,%s,%s\n",
                r.sample_id.c_str(), r.kernel_mse, r.psnr_db, r.estimate_ms,
                r.restore_ms, r.model_id.c_str(), r.config_hash.c_str());
  return buf;
}

}  // namespace

int run_eval(const RunConfig& cfg) {
  const auto& ec = cfg.eval;
  if (ec.model.empty()) throw ConfigError("eval requires a model (--model)");
  if (ec.manifest.empty() && !ec.runtime_table)
    throw ConfigError("eval requires a manifest (--manifest) or --runtime-table");

  MultiScaleModel model = load_model(ec.model);
  const int finest_ks = model.scales.back().kernel_size;
  const std::string model_id = fs::path(ec.model).filename().string();
  const std::string hash = config_hash(cfg);

  std::vector<EvalRecord> records;
  if (!ec.manifest.empty()) {
    nlohmann::json manifest = load_manifest(ec.manifest);
    const int data_ks = manifest.value("kernel_size", 0);
    if (data_ks != finest_ks)
      throw DimensionError("manifest kernels are " + std::to_string(data_ks) +
                           "×" + std::to_string(data_ks) +
                           " but the model estimates " +
                           std::to_string(finest_ks) + "×" +
                           std::to_string(finest_ks));
    const fs::path base = fs::path(ec.manifest).parent_path();
    const auto& samples = manifest.at("samples");
    records.resize(samples.size());

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_gate;
    auto worker = [&] {
      for (size_t i; (i = next.fetch_add(1)) < records.size() && !failed;) {
        try {
          const auto& s = samples.at(i);
          Image blurry = read_image((base / s.at("blurry").get<std::string>()).string());
          Image sharp = read_image((base / s.at("sharp").get<std::string>()).string());
          BlurKernel truth =
              read_kernel_json((base / s.at("kernel").get<std::string>()).string());

          DeblurResult res = multiscale_deblur(blurry, model);
          EvalRecord rec;
          rec.sample_id = s.at("id").get<std::string>();
          rec.kernel_mse = kernel_mse(res.kernel, truth);
          rec.psnr_db = psnr_interior(res.latent, sharp, (finest_ks - 1) / 2);
          rec.estimate_ms = std::accumulate(res.per_scale_ms.begin(),
                                            res.per_scale_ms.end(), 0.0);
          rec.restore_ms = res.restore_ms;
          rec.model_id = model_id;
          rec.config_hash = hash;
          records[i] = std::move(rec);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(failure_gate);
          failed = true;
          if (failure.empty()) failure = e.what();
        }
      }
    };

    unsigned n_threads = cfg.run.threads > 0
                             ? static_cast<unsigned>(cfg.run.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, std::max<size_t>(records.size(), 1));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (failed) throw IoError("eval failed: " + failure);

    std::ofstream csv(ec.out_csv, std::ios::binary);
    if (!csv) throw IoError("cannot write '" + ec.out_csv + "'");
    csv << "sample_id,kernel_mse,psnr_db,estimate_ms,restore_ms,model_id,config_hash\n";
    std::ofstream jsonl(ec.out_jsonl, std::ios::binary);
    if (!jsonl) throw IoError("cannot write '" + ec.out_jsonl + "'");
    for (const EvalRecord& r : records) {
      csv << csv_row(r);
      jsonl << nlohmann::json({{"sample_id", r.sample_id},
                               {"kernel_mse", r.kernel_mse},
                               {"psnr_db", r.psnr_db},
                               {"estimate_ms", r.estimate_ms},
                               {"restore_ms", r.restore_ms},
                               {"model_id", r.model_id},
                               {"config_hash", r.config_hash}})
                   .dump()
            << "\n";
    }
  }

  if (ec.runtime_table) {
    // Timing cells run exclusively (after the sample loop, single-threaded)
    // so parallel load doesn't pollute the medians.
    std::vector<std::pair<int, int>> grid;
    for (int dim : ec.runtime_dims)
      for (int ks : ec.runtime_kernels)
        if (ks < dim) grid.emplace_back(dim, ks);
    if (grid.empty()) throw ConfigError("runtime grid is empty");
    std::vector<RuntimeCell> cells = runtime_table(model, grid);
    std::cout << format_runtime_table(cells);
    const std::string rt_path = ec.out_csv + ".runtime.csv";
    std::ofstream rt(rt_path, std::ios::binary);
    if (!rt) throw IoError("cannot write '" + rt_path + "'");
    rt << runtime_table_csv(cells);
  }

  save_config(cfg, ec.out_csv + ".effective.ini");

  double mean_mse = 0.0, mean_psnr = 0.0, mean_est = 0.0;
  double worst_mse = 0.0, worst_psnr = HUGE_VAL;
  for (const EvalRecord& r : records) {
    mean_mse += r.kernel_mse;
    mean_psnr += r.psnr_db;
    mean_est += r.estimate_ms;
    worst_mse = std::max(worst_mse, r.kernel_mse);
    worst_psnr = std::min(worst_psnr, r.psnr_db);
  }
  if (!records.empty()) {
    mean_mse /= records.size();
    mean_psnr /= records.size();
    mean_est /= records.size();
    char line[160];
    std::snprintf(line, sizeof line,
                  "evaluated %zu samples: kernel_mse %.6g  psnr %.2f dB  "
                  "estimate %.1f ms\n",
                  records.size(), mean_mse, mean_psnr, mean_est);
    std::cout << line;
  }
  if (!cfg.run.quiet)
    emit_event({{"event", "eval_done"},
                {"samples", records.size()},
                {"mean_kernel_mse", mean_mse},
                {"mean_psnr_db", mean_psnr},
                {"mean_estimate_ms", mean_est}});

  if (!ec.thresholds.empty()) {
    if (records.empty())
      throw ConfigError("a thresholds gate needs evaluated samples");
    Thresholds t = load_thresholds(ec.thresholds);
    std::vector<std::string> violations;
    auto gate = [&](bool bad, const std::string& what) {
      if (bad) violations.push_back(what);
    };
    gate(mean_mse > t.max_mean_kernel_mse, "max_mean_kernel_mse");
    gate(mean_psnr < t.min_mean_psnr_db, "min_mean_psnr_db");
    gate(mean_est > t.max_mean_estimate_ms, "max_mean_estimate_ms");
    gate(worst_mse > t.max_kernel_mse, "max_kernel_mse");
    gate(worst_psnr < t.min_psnr_db, "min_psnr_db");
    if (!violations.empty()) {
      emit_event({{"event", "thresholds_violated"}, {"metrics", violations}});
      return 1;
    }
  }
  return 0;
}

}  // namespace deblur::cli
