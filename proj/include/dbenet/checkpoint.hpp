#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbenet/params.hpp"
#include "dbenet/tensor.hpp"

namespace dbenet {

// Named-tensor archive, the knowledge-transfer carrier.
//
// Byte layout (little-endian throughout):
//   magic "DBEC" | version u8 | metadata length u64 | metadata JSON (UTF-8)
//   | concatenated float32 row-major tensor payloads
//
// The metadata carries the model config, a per-tensor table with shape,
// payload offset and CRC-32, and the parameter kind so buffers rebuild
// correctly. Loading validates magic/version/bounds; a CRC mismatch is
// flagged per tensor rather than fatal.
struct Checkpoint {
  static constexpr uint8_t kVersion = 1;

  struct Entry {
    std::string name;
    std::vector<int64_t> shape;
    bool buffer = false;
    Tensor<float> value;
  };

  nlohmann::json config;  // model architecture + creation seed
  std::vector<Entry> entries;
  std::vector<std::string> corrupt_tensors;  // CRC mismatches found on load

  bool has(const std::string& name) const;
  const Entry& get(const std::string& name) const;

  static Checkpoint from_store(const ParamStore<float>& store, nlohmann::json config);
  ParamStore<float> to_store() const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dbenet
