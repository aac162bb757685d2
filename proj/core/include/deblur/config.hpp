#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace deblur {

// Declarative run settings covering every tunable of every subsystem. A
// parsed config starts from these defaults, so serializing one back out
// materializes the full effective state — a persisted config is always
// sufficient to reproduce the run that wrote it.
//
// File syntax: INI-style `[section]` headers and `key = value` lines.
// Blank lines and lines starting with '#' or ';' are ignored. Values are
// trimmed verbatim (no quoting, no inline comments). Unknown sections or
// keys are refused, as are values that fail to parse for their type.
// Integer lists ("5,9,17") separate entries with commas.
//
// If [train] names a preset, the preset's fields are applied before any
// explicit key from the same file, so explicit keys always win.
struct RunConfig {
  struct Synth {
    std::string corpus;              // directory of source images (PNG/PGM)
    std::string out_dir = "synth_out";
    int count = 100;                 // samples to emit
    int kernel_size = 17;
    int crop = 256;
    double noise_sigma = 0.01;
    double length_scale = 0.3;       // trajectory smoothness
    double signal_std = 0.25;        // trajectory amplitude
    int trajectory_samples = 256;
    uint64_t seed = 7;
  } synth;

  struct Train {
    std::string corpus;              // images to synthesize samples from
    std::string out_model = "model.dbm";
    std::string resume;              // checkpoint to continue from
    std::string preset = "stack3";   // stack3 | smoke
    std::vector<int> kernel_sizes = {5, 9, 17};
    int num_filters = 32;
    int filter_size = 7;
    int hidden_blocks = 1;
    int pairs = 2;                   // feature pairs entering the quotient
    int stages = 3;                  // stages per scale
    int steps = 2000;                // optimizer steps per scale
    int steps_per_stage_add = 500;
    int freeze_steps = 100;
    int checkpoint_every = 500;
    double loss_skip_factor = 10.0;
    double lr = 0.01;
    double rho = 0.95;
    double eps = 1e-6;
    double beta_k = 1e-4;
    int crop = 64;                   // training crop edge fed to the network
    double noise_sigma = 0.01;
    uint64_t seed = 1;
    std::string report = "report.jsonl";
  } train;

  struct Deblur {
    std::string model;
    std::string input;               // one image file
    std::string out_dir = "deblur_out";
    std::string policy = "kernel-ratio";  // kernel-ratio | factor-two
    bool spatially_varying = false;
    double eta = 1.0;                // fraction of motion coefficients kept
    int patch_size = 0;              // px; 0 → a quarter of the image dimension
    double patch_overlap = 0.5;
    double max_translation = 0.0;    // px; 0 → kernel radius
    double max_rotation_deg = 2.0;
    double rotation_step_deg = 0.25;
    double beta_x = 0.0;             // patch restoration weight; 0 → trained value
  } deblur;

  struct Eval {
    std::string model;
    std::string manifest;
    std::string out_csv = "metrics.csv";
    std::string out_jsonl = "report.jsonl";
    std::string thresholds;          // optional gate file: metric = max-value
    bool runtime_table = false;      // also time the size × kernel grid
    std::vector<int> runtime_dims = {127, 255, 511};
    std::vector<int> runtime_kernels = {17, 25, 33};
  } eval;

  struct Gradcheck {
    uint64_t seed = 1234;
    double step = 1e-5;
    double tolerance = 1e-4;
    int instances = 50;              // random instances per quotient row
    std::string corrupt;             // fault hook: row name to perturb
  } gradcheck;

  struct Run {
    int threads = 0;                 // 0 → hardware; timing paths force 1
    int progress_every = 50;         // JSONL progress cadence in steps
    bool quiet = false;
  } run;
};

// Parse from text / file. Throws ConfigError on unknown keys, bad values,
// or malformed lines (messages carry the line number); IoError if the file
// cannot be read.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Full effective state, every key in every section. parse(serialize(c))
// reproduces c exactly (doubles round-trip at full precision).
std::string serialize_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

// Architecture presets for [train]: "stack3" is the default deep network
// (32 filters, 3 stages per scale, 5/9/17 kernel cascade); "smoke" is a
// desk-scale setup that trains in minutes. Unknown names throw ConfigError.
void apply_preset(RunConfig& cfg, const std::string& name);

// FNV-1a of the serialized effective config, as fixed-width hex. Stamped
// into eval records so result rows are traceable to their settings.
std::string config_hash(const RunConfig& cfg);

}  // namespace deblur
