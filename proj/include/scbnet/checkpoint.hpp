#pragma once

#include <string>

#include "scbnet/arch.hpp"
#include "scbnet/network.hpp"

namespace scbnet {

// Binary checkpoint layout, all integers little-endian:
//   magic 'SCBN', format version u16, u32 config length + config JSON,
//   u32 array count, then per parameter array in spec order:
//   u32 name length + name, u8 trainable flag, u32 rank, rank x u32 dims,
//   IEEE-754 f32 values. BN running statistics ride along as non-trainable
//   arrays so a reloaded model evaluates identically.
inline constexpr uint16_t kCheckpointVersion = 1;

void save_model(const NetworkSpec& spec, const NetworkParams& params,
                const std::string& path);

struct LoadedModel {
  NetworkSpec spec;
  NetworkParams params;
};

LoadedModel load_model(const std::string& path);

}  // namespace scbnet
