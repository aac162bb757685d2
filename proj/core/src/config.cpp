#include "deblur/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "deblur/errors.hpp"
#include "deblur/eval.hpp"

namespace deblur {

namespace {

enum class Kind { Int, U64, Double, Bool, String, IntList };

// One schema row tying a `[section] key` pair to a RunConfig member. The
// table below is the single source of truth for parsing, serialization,
// and unknown-key rejection.
struct Binding {
  const char* section;
  const char* key;
  Kind kind;
  void* ptr;
};

std::vector<Binding> bindings(RunConfig& c) {
  using K = Kind;
  return {
      {"synth", "corpus", K::String, &c.synth.corpus},
      {"synth", "out_dir", K::String, &c.synth.out_dir},
      {"synth", "count", K::Int, &c.synth.count},
      {"synth", "kernel_size", K::Int, &c.synth.kernel_size},
      {"synth", "crop", K::Int, &c.synth.crop},
      {"synth", "noise_sigma", K::Double, &c.synth.noise_sigma},
      {"synth", "length_scale", K::Double, &c.synth.length_scale},
      {"synth", "signal_std", K::Double, &c.synth.signal_std},
      {"synth", "trajectory_samples", K::Int, &c.synth.trajectory_samples},
      {"synth", "seed", K::U64, &c.synth.seed},

      {"train", "corpus", K::String, &c.train.corpus},
      {"train", "out_model", K::String, &c.train.out_model},
      {"train", "resume", K::String, &c.train.resume},
      {"train", "preset", K::String, &c.train.preset},
      {"train", "kernel_sizes", K::IntList, &c.train.kernel_sizes},
      {"train", "num_filters", K::Int, &c.train.num_filters},
      {"train", "filter_size", K::Int, &c.train.filter_size},
      {"train", "hidden_blocks", K::Int, &c.train.hidden_blocks},
      {"train", "pairs", K::Int, &c.train.pairs},
      {"train", "stages", K::Int, &c.train.stages},
      {"train", "steps", K::Int, &c.train.steps},
      {"train", "steps_per_stage_add", K::Int, &c.train.steps_per_stage_add},
      {"train", "freeze_steps", K::Int, &c.train.freeze_steps},
      {"train", "checkpoint_every", K::Int, &c.train.checkpoint_every},
      {"train", "loss_skip_factor", K::Double, &c.train.loss_skip_factor},
      {"train", "lr", K::Double, &c.train.lr},
      {"train", "rho", K::Double, &c.train.rho},
      {"train", "eps", K::Double, &c.train.eps},
      {"train", "beta_k", K::Double, &c.train.beta_k},
      {"train", "crop", K::Int, &c.train.crop},
      {"train", "noise_sigma", K::Double, &c.train.noise_sigma},
      {"train", "seed", K::U64, &c.train.seed},
      {"train", "report", K::String, &c.train.report},

      {"deblur", "model", K::String, &c.deblur.model},
      {"deblur", "input", K::String, &c.deblur.input},
      {"deblur", "out_dir", K::String, &c.deblur.out_dir},
      {"deblur", "policy", K::String, &c.deblur.policy},
      {"deblur", "spatially_varying", K::Bool, &c.deblur.spatially_varying},
      {"deblur", "eta", K::Double, &c.deblur.eta},
      {"deblur", "patch_size", K::Int, &c.deblur.patch_size},
      {"deblur", "patch_overlap", K::Double, &c.deblur.patch_overlap},
      {"deblur", "max_translation", K::Double, &c.deblur.max_translation},
      {"deblur", "max_rotation_deg", K::Double, &c.deblur.max_rotation_deg},
      {"deblur", "rotation_step_deg", K::Double, &c.deblur.rotation_step_deg},
      {"deblur", "beta_x", K::Double, &c.deblur.beta_x},

      {"eval", "model", K::String, &c.eval.model},
      {"eval", "manifest", K::String, &c.eval.manifest},
      {"eval", "out_csv", K::String, &c.eval.out_csv},
      {"eval", "out_jsonl", K::String, &c.eval.out_jsonl},
      {"eval", "thresholds", K::String, &c.eval.thresholds},
      {"eval", "runtime_table", K::Bool, &c.eval.runtime_table},
      {"eval", "runtime_dims", K::IntList, &c.eval.runtime_dims},
      {"eval", "runtime_kernels", K::IntList, &c.eval.runtime_kernels},

      {"gradcheck", "seed", K::U64, &c.gradcheck.seed},
      {"gradcheck", "step", K::Double, &c.gradcheck.step},
      {"gradcheck", "tolerance", K::Double, &c.gradcheck.tolerance},
      {"gradcheck", "instances", K::Int, &c.gradcheck.instances},
      {"gradcheck", "corrupt", K::String, &c.gradcheck.corrupt},

      {"run", "threads", K::Int, &c.run.threads},
      {"run", "progress_every", K::Int, &c.run.progress_every},
      {"run", "quiet", K::Bool, &c.run.quiet},
  };
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void bad_line(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

long long parse_int(const std::string& v, int line) {
  size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    bad_line(line, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) bad_line(line, "expected an integer, got '" + v + "'");
  return out;
}

void assign(const Binding& b, const std::string& value, int line) {
  switch (b.kind) {
    case Kind::Int:
      *static_cast<int*>(b.ptr) = static_cast<int>(parse_int(value, line));
      break;
    case Kind::U64: {
      long long v = parse_int(value, line);
      if (v < 0) bad_line(line, "seed must be non-negative");
      *static_cast<uint64_t*>(b.ptr) = static_cast<uint64_t>(v);
      break;
    }
    case Kind::Double: {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        bad_line(line, "expected a number, got '" + value + "'");
      }
      if (used != value.size())
        bad_line(line, "expected a number, got '" + value + "'");
      *static_cast<double*>(b.ptr) = v;
      break;
    }
    case Kind::Bool:
      if (value == "true")
        *static_cast<bool*>(b.ptr) = true;
      else if (value == "false")
        *static_cast<bool*>(b.ptr) = false;
      else
        bad_line(line, "expected true or false, got '" + value + "'");
      break;
    case Kind::String:
      *static_cast<std::string*>(b.ptr) = value;
      break;
    case Kind::IntList: {
      std::vector<int> out;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_int(trim(item), line)));
      if (out.empty()) bad_line(line, "expected a comma-separated integer list");
      *static_cast<std::vector<int>*>(b.ptr) = std::move(out);
      break;
    }
  }
}

struct RawEntry {
  std::string section, key, value;
  int line;
};

std::vector<RawEntry> tokenize(const std::string& text) {
  std::vector<RawEntry> entries;
  std::stringstream ss(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') bad_line(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) bad_line(line, "empty section name");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) bad_line(line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) bad_line(line, "empty key");
    if (section.empty()) bad_line(line, "key '" + key + "' before any [section]");
    entries.push_back({section, key, value, line});
  }
  return entries;
}

const Binding* find_binding(const std::vector<Binding>& table,
                            const RawEntry& e) {
  for (const Binding& b : table)
    if (e.section == b.section && e.key == b.key) return &b;
  return nullptr;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  auto table = bindings(cfg);
  auto entries = tokenize(text);

  // Validate everything up front so an unknown key is reported even when it
  // appears after a bad preset line would have thrown.
  for (const RawEntry& e : entries)
    if (find_binding(table, e) == nullptr)
      bad_line(e.line, "unknown key '" + e.section + "." + e.key + "'");

  // Preset first: explicit keys from the same file override its choices.
  for (const RawEntry& e : entries)
    if (e.section == "train" && e.key == "preset") apply_preset(cfg, e.value);

  for (const RawEntry& e : entries) assign(*find_binding(table, e), e.value, e.line);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  auto table = bindings(const_cast<RunConfig&>(cfg));
  std::string out;
  const char* open_section = "";
  char buf[64];
  for (const Binding& b : table) {
    if (std::string(open_section) != b.section) {
      if (*open_section) out += "\n";
      out += "[";
      out += b.section;
      out += "]\n";
      open_section = b.section;
    }
    out += b.key;
    out += " = ";
    switch (b.kind) {
      case Kind::Int:
        out += std::to_string(*static_cast<const int*>(b.ptr));
        break;
      case Kind::U64:
        std::snprintf(buf, sizeof buf, "%" PRIu64,
                      *static_cast<const uint64_t*>(b.ptr));
        out += buf;
        break;
      case Kind::Double:
        std::snprintf(buf, sizeof buf, "%.17g",
                      *static_cast<const double*>(b.ptr));
        out += buf;
        break;
      case Kind::Bool:
        out += *static_cast<const bool*>(b.ptr) ? "true" : "false";
        break;
      case Kind::String:
        out += *static_cast<const std::string*>(b.ptr);
        break;
      case Kind::IntList: {
        const auto& v = *static_cast<const std::vector<int>*>(b.ptr);
        for (size_t i = 0; i < v.size(); ++i) {
          if (i) out += ",";
          out += std::to_string(v[i]);
        }
        break;
      }
    }
    out += "\n";
  }
  return out;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write config file '" + path + "'");
  out << serialize_config(cfg);
  if (!out) throw IoError("failed writing config file '" + path + "'");
}

void apply_preset(RunConfig& cfg, const std::string& name) {
  if (name == "stack3") {
    RunConfig defaults;
    cfg.train.num_filters = defaults.train.num_filters;
    cfg.train.filter_size = defaults.train.filter_size;
    cfg.train.hidden_blocks = defaults.train.hidden_blocks;
    cfg.train.pairs = defaults.train.pairs;
    cfg.train.stages = defaults.train.stages;
    cfg.train.kernel_sizes = defaults.train.kernel_sizes;
    cfg.train.steps = defaults.train.steps;
    cfg.train.steps_per_stage_add = defaults.train.steps_per_stage_add;
    cfg.train.freeze_steps = defaults.train.freeze_steps;
    cfg.train.crop = defaults.train.crop;
  } else if (name == "smoke") {
    cfg.train.num_filters = 2;
    cfg.train.filter_size = 5;
    cfg.train.hidden_blocks = 1;
    cfg.train.pairs = 2;
    cfg.train.stages = 2;
    cfg.train.kernel_sizes = {9};
    cfg.train.steps = 300;
    cfg.train.steps_per_stage_add = 100;
    cfg.train.freeze_steps = 25;
    cfg.train.crop = 48;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected stack3 or smoke)");
  }
  cfg.train.preset = name;
}

std::string config_hash(const RunConfig& cfg) {
  // Output locations have no influence on the produced artifacts, so two runs
  // that differ only in where results land share a hash.
  RunConfig keyed = cfg;
  keyed.synth.out_dir.clear();
  keyed.train.out_model.clear();
  keyed.train.report.clear();
  keyed.deblur.out_dir.clear();
  keyed.eval.out_csv.clear();
  keyed.eval.out_jsonl.clear();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a_hash(serialize_config(keyed)));
  return buf;
}

}  // namespace deblur
