#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scbnet/errors.hpp"

namespace scbnet {

// One conv block: conv(filters, 3x3, same) -> BN -> ReLU -> 2x2 max pool.
struct ConvBlockSpec {
  int filters = 0;

  bool operator==(const ConvBlockSpec&) const = default;
};

// Skip connection block. All three conv layers share the SCBS filter count:
// direct path conv->BN->ReLU->conv->BN, skip path conv->BN, elementwise sum,
// ReLU after the addition. No pooling inside the block.
struct SCBSpec {
  int scbs = 0;

  bool operator==(const SCBSpec&) const = default;
};

struct NetworkSpec {
  std::string name;
  std::vector<ConvBlockSpec> conv_blocks;
  std::optional<SCBSpec> scb;
  std::vector<int> fc_sizes{1024, 256};
  int input_resolution = 64;  // square grayscale input (1, R, R)

  static constexpr int output_neurons = 1;

  // Structural invariants; resolution feasibility is checked by infer_shapes.
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

// Registered architecture ids, arch-1 .. arch-10.
const std::vector<std::string>& registry_ids();

// Builds a registry architecture. Unknown ids raise LookupError listing the
// valid ids.
NetworkSpec build_architecture(const std::string& id, int input_resolution = 64);

// Architecture config (JSON): keys name, conv_filters, scbs (optional),
// fc_sizes (default [1024, 256]), input_resolution (default 64).
std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);
NetworkSpec load_spec_file(const std::string& path);

// Conv layers produced by expanding an SCB on a given input channel count,
// in parameter order: direct1 (in -> scbs), direct2 (scbs -> scbs),
// skip (in -> scbs). Each carries its own BN.
struct ScbConvDesc {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
};
std::vector<ScbConvDesc> expand_scb(const SCBSpec& scb, int input_channels);

struct FeatureMapShape {
  std::string label;
  int c = 0, h = 0, w = 0;
};

struct ShapeTrace {
  std::vector<FeatureMapShape> maps;  // input, then after each block / SCB
  int flatten_length = 0;
  std::vector<int> fc_out;  // hidden sizes then the single output neuron
};

// Walks the layer stack under same-padding conv and 2x2/stride-2 pooling.
// Raises ResolutionError naming the offending block when a pool underflows.
ShapeTrace infer_shapes(const NetworkSpec& spec);

struct LayerParamCount {
  std::string layer;
  long long count = 0;
};

struct ParamCountReport {
  std::vector<LayerParamCount> per_layer;
  long long total = 0;
};

// Trainable parameter counts: conv f*c_in*9 + f, BN 2c (running stats are
// not trainable), dense out*in + out.
ParamCountReport count_params(const NetworkSpec& spec);

}  // namespace scbnet
