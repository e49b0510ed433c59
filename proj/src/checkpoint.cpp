#include "scbnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "scbnet/errors.hpp"

namespace scbnet {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'B', 'N'};

void put_u16(std::ostream& os, uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_f32(std::ostream& os, float v) {
  put_u32(os, std::bit_cast<uint32_t>(v));
}

struct Reader {
  std::ifstream in;
  std::string path;

  void read_bytes(void* dst, size_t count, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in.gcount()) != count) {
      throw CheckpointError("truncated checkpoint '" + path + "' while reading " +
                            what);
    }
  }

  uint16_t get_u16(const char* what) {
    unsigned char b[2];
    read_bytes(b, 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }

  uint32_t get_u32(const char* what) {
    unsigned char b[4];
    read_bytes(b, 4, what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }

  float get_f32(const char* what) {
    return std::bit_cast<float>(get_u32(what));
  }

  std::string get_string(uint32_t len, const char* what) {
    std::string s(len, '\0');
    if (len > 0) read_bytes(s.data(), len, what);
    return s;
  }
};

std::string dims_string(const std::vector<uint32_t>& dims) {
  std::string s = "(";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

}  // namespace

void save_model(const NetworkSpec& spec, const NetworkParams& params,
                const std::string& path) {
  check_params_match(spec, params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError("cannot open '" + path + "' for writing");
  }
  out.write(kMagic, 4);
  put_u16(out, kCheckpointVersion);
  const std::string config = spec_to_json(spec);
  put_u32(out, static_cast<uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  uint32_t count = 0;
  for_each_array(params,
                 [&count](const ParamArrayInfo&, const std::vector<float>&) {
                   count += 1;
                 });
  put_u32(out, count);
  for_each_array(params, [&out](const ParamArrayInfo& info,
                                const std::vector<float>& v) {
    put_u32(out, static_cast<uint32_t>(info.name.size()));
    out.write(info.name.data(),
              static_cast<std::streamsize>(info.name.size()));
    out.put(info.trainable ? '\1' : '\0');
    put_u32(out, static_cast<uint32_t>(info.dims.size()));
    for (uint32_t d : info.dims) put_u32(out, d);
    for (float x : v) put_f32(out, x);
  });
  out.flush();
  if (!out) {
    throw CheckpointError("write to '" + path + "' failed");
  }
}

LoadedModel load_model(const std::string& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  if (!r.in) {
    throw CheckpointError("cannot open checkpoint '" + path + "'");
  }
  char magic[4];
  r.read_bytes(magic, 4, "magic bytes");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("'" + path + "' is not a model checkpoint (bad magic)");
  }
  const uint16_t version = r.get_u16("format version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const uint32_t config_len = r.get_u32("config length");
  const std::string config = r.get_string(config_len, "config");

  LoadedModel model;
  try {
    model.spec = spec_from_json(config);
  } catch (const Error& e) {
    throw CheckpointError("embedded config of '" + path +
                          "' is invalid: " + e.what());
  }
  model.params = alloc_params<float>(model.spec);

  const uint32_t count = r.get_u32("array count");
  uint32_t expected = 0;
  for_each_array(model.params,
                 [&expected](const ParamArrayInfo&, const std::vector<float>&) {
                   expected += 1;
                 });
  if (count != expected) {
    throw CheckpointError("checkpoint '" + path + "' holds " +
                          std::to_string(count) + " arrays but spec '" +
                          model.spec.name + "' needs " +
                          std::to_string(expected));
  }
  for_each_array(model.params, [&r](const ParamArrayInfo& info,
                                    std::vector<float>& v) {
    const uint32_t name_len = r.get_u32("array name length");
    const std::string name = r.get_string(name_len, "array name");
    if (name != info.name) {
      throw CheckpointError("checkpoint array '" + name +
                            "' where the embedded spec expects '" + info.name +
                            "'");
    }
    unsigned char trainable;
    r.read_bytes(&trainable, 1, "trainable flag");
    const uint32_t rank = r.get_u32("array rank");
    std::vector<uint32_t> dims(rank);
    for (uint32_t i = 0; i < rank; ++i) dims[i] = r.get_u32("array dims");
    if (dims != info.dims) {
      throw CheckpointError("checkpoint array '" + name + "' has shape " +
                            dims_string(dims) +
                            " but the embedded spec expects " +
                            dims_string(info.dims));
    }
    for (float& x : v) x = r.get_f32("array values");
  });
  return model;
}

}  // namespace scbnet
