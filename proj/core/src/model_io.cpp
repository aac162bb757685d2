#include "deblur/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace deblur {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model blob I/O assumes a little-endian host");

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'B', 'M', 'F'};

// Tensor schedule for one stage, matching param_ptrs order.
struct TensorDecl {
  std::string name;
  std::vector<int> shape;
};

std::vector<TensorDecl> stage_tensors(const StageParams& st, const std::string& prefix) {
  std::vector<TensorDecl> t;
  t.push_back({prefix + ".conv.weight",
               {st.conv.num_filters, st.conv.in_channels, st.conv.filter_size,
                st.conv.filter_size}});
  if (st.conv.use_bias) t.push_back({prefix + ".conv.bias", {st.conv.num_filters}});
  for (size_t m = 0; m < st.hidden.size(); ++m)
    t.push_back({prefix + ".hidden" + std::to_string(m) + ".weight",
                 {st.hidden[m].out, st.hidden[m].in}});
  t.push_back({prefix + ".out.alpha", {st.out.pairs, st.out.hidden}});
  t.push_back({prefix + ".out.beta", {st.out.pairs, st.out.hidden}});
  t.push_back({prefix + ".log_beta_x", {1}});
  return t;
}

size_t numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

}  // namespace

void save_model(const MultiScaleModel& model, const std::string& path) {
  validate_model(model);

  json header;
  header["format_version"] = model.format_version;
  header["dtype"] = "f32le";
  json scales = json::array();
  json tensors = json::array();

  for (size_t s = 0; s < model.scales.size(); ++s) {
    const ScaleNetwork& net = model.scales[s];
    json jscale;
    jscale["kernel_size"] = net.kernel_size;
    jscale["beta_k"] = net.beta_k;
    json jstages = json::array();
    for (size_t t = 0; t < net.stages.size(); ++t) {
      const StageShape sh = shape_of(net.stages[t]);
      jstages.push_back({{"num_filters", sh.num_filters},
                         {"filter_size", sh.filter_size},
                         {"in_channels", sh.in_channels},
                         {"hidden_blocks", sh.hidden_blocks},
                         {"pairs", sh.pairs},
                         {"use_bias", sh.use_bias}});
      const std::string prefix =
          "scale" + std::to_string(s) + ".stage" + std::to_string(t);
      for (const TensorDecl& td : stage_tensors(net.stages[t], prefix))
        tensors.push_back({{"name", td.name}, {"shape", td.shape}});
    }
    jscale["stages"] = std::move(jstages);
    scales.push_back(std::move(jscale));
  }
  header["scales"] = std::move(scales);
  header["tensors"] = std::move(tensors);
  const std::string htext = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f.write(kMagic, 4);
  const uint32_t hlen = static_cast<uint32_t>(htext.size());
  f.write(reinterpret_cast<const char*>(&hlen), 4);
  f.write(htext.data(), hlen);

  // Blob in param_ptrs order; const access mirrors it via a mutable copy of
  // the pointer schedule.
  for (const ScaleNetwork& net : model.scales)
    for (const StageParams& st : net.stages) {
      StageParams& mut = const_cast<StageParams&>(st);
      for (double* p : param_ptrs(mut)) {
        const float v = static_cast<float>(*p);
        f.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  if (!f) throw IoError("write failure on '" + path + "'");
}

MultiScaleModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");

  char magic[4];
  uint32_t hlen = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&hlen), 4);
  if (!f || std::string(magic, 4) != std::string(kMagic, 4))
    throw CorruptModelError("'" + path + "' is not a model file (bad magic)");

  std::string htext(hlen, '\0');
  f.read(htext.data(), hlen);
  if (!f) throw CorruptModelError("truncated model header in '" + path + "'");

  json header = json::parse(htext, nullptr, false);
  if (header.is_discarded())
    throw CorruptModelError("unparsable model header in '" + path + "'");

  const int version = header.value("format_version", -1);
  if (version != kModelFormatVersion)
    throw ModelVersionError("model format version " + std::to_string(version) +
                            " unsupported; this build reads version " +
                            std::to_string(kModelFormatVersion));

  MultiScaleModel model;
  model.format_version = version;
  try {
    for (const json& jscale : header.at("scales")) {
      ScaleNetwork net;
      net.kernel_size = jscale.at("kernel_size").get<int>();
      net.beta_k = jscale.at("beta_k").get<double>();
      for (const json& jstage : jscale.at("stages")) {
        StageShape sh;
        sh.num_filters = jstage.at("num_filters").get<int>();
        sh.filter_size = jstage.at("filter_size").get<int>();
        sh.in_channels = jstage.at("in_channels").get<int>();
        sh.hidden_blocks = jstage.at("hidden_blocks").get<int>();
        sh.pairs = jstage.at("pairs").get<int>();
        sh.use_bias = jstage.at("use_bias").get<bool>();
        Rng dummy(0);  // shapes only; weights are overwritten from the blob
        net.stages.push_back(init_params(sh, dummy));
      }
      model.scales.push_back(std::move(net));
    }
  } catch (const json::exception& e) {
    throw CorruptModelError("model header missing fields in '" + path + "': " + e.what());
  } catch (const DimensionError& e) {
    throw ModelInvariantError("invalid stage shape in '" + path + "': " + e.what());
  }

  // Cross-check the declared tensor list against the derived shapes.
  size_t total = 0;
  {
    std::vector<TensorDecl> expected;
    for (size_t s = 0; s < model.scales.size(); ++s)
      for (size_t t = 0; t < model.scales[s].stages.size(); ++t) {
        const std::string prefix =
            "scale" + std::to_string(s) + ".stage" + std::to_string(t);
        auto decls = stage_tensors(model.scales[s].stages[t], prefix);
        expected.insert(expected.end(), decls.begin(), decls.end());
      }
    const json& tensors = header.at("tensors");
    if (tensors.size() != expected.size())
      throw ModelInvariantError("tensor list does not match architecture in '" + path + "'");
    for (size_t i = 0; i < expected.size(); ++i) {
      if (tensors[i].at("name").get<std::string>() != expected[i].name ||
          tensors[i].at("shape").get<std::vector<int>>() != expected[i].shape)
        throw ModelInvariantError("tensor '" + expected[i].name +
                                  "' mismatches the declared architecture");
      total += numel(expected[i].shape);
    }
  }

  std::vector<float> blob(total);
  f.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(total * 4));
  if (static_cast<size_t>(f.gcount()) != total * 4)
    throw CorruptModelError("truncated tensor blob in '" + path + "'");

  size_t cursor = 0;
  for (ScaleNetwork& net : model.scales)
    for (StageParams& st : net.stages)
      for (double* p : param_ptrs(st)) {
        const float v = blob[cursor++];
        if (!std::isfinite(v))
          throw ModelInvariantError("non-finite parameter in '" + path + "'");
        *p = v;
      }

  validate_model(model);
  return model;
}

}  // namespace deblur
