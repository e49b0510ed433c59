#include "scbnet/arch.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace scbnet {

void NetworkSpec::validate() const {
  for (size_t i = 0; i < conv_blocks.size(); ++i) {
    if (conv_blocks[i].filters < 1) {
      throw ConfigError("conv block " + std::to_string(i + 1) +
                        " must have filters >= 1, got " +
                        std::to_string(conv_blocks[i].filters));
    }
  }
  if (scb && scb->scbs < 1) {
    throw ConfigError("scbs must be >= 1, got " + std::to_string(scb->scbs));
  }
  for (size_t i = 0; i < fc_sizes.size(); ++i) {
    if (fc_sizes[i] < 1) {
      throw ConfigError("fc layer " + std::to_string(i + 1) +
                        " must have size >= 1, got " +
                        std::to_string(fc_sizes[i]));
    }
  }
  if (input_resolution < 2 || input_resolution % 2 != 0) {
    throw ConfigError("input_resolution must be a positive even integer, got " +
                      std::to_string(input_resolution));
  }
  if (conv_blocks.empty() && !scb) {
    throw ConfigError("network needs at least one conv block or an SCB");
  }
}

const std::vector<std::string>& registry_ids() {
  static const std::vector<std::string> ids = {
      "arch-1", "arch-2", "arch-3", "arch-4",  "arch-5",
      "arch-6", "arch-7", "arch-8", "arch-9", "arch-10"};
  return ids;
}

namespace {

struct RegistryRow {
  std::vector<int> conv_filters;
  std::optional<int> scbs;
};

const std::map<std::string, RegistryRow>& registry() {
  static const std::map<std::string, RegistryRow> rows = {
      {"arch-1", {{32, 64}, {}}},
      {"arch-2", {{64, 128}, {}}},
      {"arch-3", {{32, 64, 128}, {}}},
      {"arch-4", {{64, 128, 256}, {}}},
      {"arch-5", {{32, 64, 128, 256}, {}}},
      {"arch-6", {{}, 3}},
      {"arch-7", {{32, 64}, 3}},
      {"arch-8", {{32, 64, 128, 256}, 3}},
      {"arch-9", {{64, 128, 256}, 3}},
      {"arch-10", {{32, 64}, 8}},
  };
  return rows;
}

}  // namespace

NetworkSpec build_architecture(const std::string& id, int input_resolution) {
  const auto it = registry().find(id);
  if (it == registry().end()) {
    std::ostringstream os;
    os << "unknown architecture '" << id << "'; valid ids:";
    for (const auto& k : registry_ids()) os << " " << k;
    throw LookupError(os.str());
  }
  NetworkSpec spec;
  spec.name = id;
  for (int f : it->second.conv_filters) spec.conv_blocks.push_back({f});
  if (it->second.scbs) spec.scb = SCBSpec{*it->second.scbs};
  spec.input_resolution = input_resolution;
  spec.validate();
  return spec;
}

std::string spec_to_json(const NetworkSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  std::vector<int> filters;
  for (const auto& b : spec.conv_blocks) filters.push_back(b.filters);
  j["conv_filters"] = filters;
  if (spec.scb) j["scbs"] = spec.scb->scbs;
  j["fc_sizes"] = spec.fc_sizes;
  j["input_resolution"] = spec.input_resolution;
  return j.dump(2);
}

NetworkSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("architecture config is not valid JSON: ") +
                      e.what());
  }
  NetworkSpec spec;
  try {
    spec.name = j.value("name", std::string("custom"));
    for (int f : j.value("conv_filters", std::vector<int>{})) {
      spec.conv_blocks.push_back({f});
    }
    if (j.contains("scbs") && !j["scbs"].is_null()) {
      spec.scb = SCBSpec{j["scbs"].get<int>()};
    }
    spec.fc_sizes = j.value("fc_sizes", std::vector<int>{1024, 256});
    spec.input_resolution = j.value("input_resolution", 64);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad architecture config field: ") + e.what());
  }
  spec.validate();
  return spec;
}

NetworkSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open architecture config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return spec_from_json(buf.str());
}

std::vector<ScbConvDesc> expand_scb(const SCBSpec& scb, int input_channels) {
  if (input_channels < 1) {
    throw ConfigError("SCB input channels must be >= 1, got " +
                      std::to_string(input_channels));
  }
  return {
      {"scb.direct1", input_channels, scb.scbs},
      {"scb.direct2", scb.scbs, scb.scbs},
      {"scb.skip", input_channels, scb.scbs},
  };
}

ShapeTrace infer_shapes(const NetworkSpec& spec) {
  spec.validate();
  ShapeTrace trace;
  int c = 1, h = spec.input_resolution, w = spec.input_resolution;
  trace.maps.push_back({"input", c, h, w});
  for (size_t i = 0; i < spec.conv_blocks.size(); ++i) {
    c = spec.conv_blocks[i].filters;
    if (h < 2 || w < 2) {
      throw ResolutionError(
          "conv block " + std::to_string(i + 1) + " of " + spec.name +
          ": 2x2 pool on a " + std::to_string(h) + "x" + std::to_string(w) +
          " map at input resolution " + std::to_string(spec.input_resolution));
    }
    h /= 2;
    w /= 2;
    trace.maps.push_back({"block" + std::to_string(i + 1), c, h, w});
  }
  if (spec.scb) {
    c = spec.scb->scbs;  // spatial size unchanged, no pooling in the SCB
    trace.maps.push_back({"scb", c, h, w});
  }
  trace.flatten_length = c * h * w;
  for (int s : spec.fc_sizes) trace.fc_out.push_back(s);
  trace.fc_out.push_back(NetworkSpec::output_neurons);
  return trace;
}

ParamCountReport count_params(const NetworkSpec& spec) {
  spec.validate();
  ParamCountReport report;
  auto add = [&report](const std::string& layer, long long n) {
    report.per_layer.push_back({layer, n});
    report.total += n;
  };
  int c = 1;
  for (size_t i = 0; i < spec.conv_blocks.size(); ++i) {
    const int f = spec.conv_blocks[i].filters;
    const std::string tag = "block" + std::to_string(i + 1);
    add(tag + ".conv", 9LL * c * f + f);
    add(tag + ".bn", 2LL * f);
    c = f;
  }
  if (spec.scb) {
    for (const auto& d : expand_scb(*spec.scb, c)) {
      add(d.name + ".conv", 9LL * d.in_channels * d.out_channels + d.out_channels);
      add(d.name + ".bn", 2LL * d.out_channels);
    }
    c = spec.scb->scbs;
  }
  const ShapeTrace trace = infer_shapes(spec);
  long long in_features = trace.flatten_length;
  for (size_t i = 0; i < spec.fc_sizes.size(); ++i) {
    const long long out = spec.fc_sizes[i];
    add("fc" + std::to_string(i + 1), out * in_features + out);
    in_features = out;
  }
  add("out", in_features + 1);
  return report;
}

}  // namespace scbnet
