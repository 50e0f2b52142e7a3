#include "dbenet/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "dbenet/common.hpp"

namespace dbenet {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'B', 'E', 'C'};

uint32_t tensor_crc(const Tensor<float>& t) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(t.data.data()), static_cast<uInt>(t.data.size() * sizeof(float))));
}

}  // namespace

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return true;
  return false;
}

const Checkpoint::Entry& Checkpoint::get(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw InvalidArgument("checkpoint has no tensor named " + name);
}

Checkpoint Checkpoint::from_store(const ParamStore<float>& store, json config) {
  Checkpoint c;
  c.config = std::move(config);
  for (const auto& p : store.items())
    c.entries.push_back(Entry{p.name, p.value.shape, p.kind == ParamKind::Buffer, p.value});
  return c;
}

ParamStore<float> Checkpoint::to_store() const {
  ParamStore<float> store;
  for (const auto& e : entries) store.add(e.name, e.value, e.buffer ? ParamKind::Buffer : ParamKind::Weight);
  return store;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json meta;
  meta["config"] = ckpt.config;
  json table = json::array();
  uint64_t offset = 0;
  for (const auto& e : ckpt.entries) {
    if (e.value.numel() != Tensor<float>::numel_of(e.shape))
      throw InternalError("checkpoint entry " + e.name + " has inconsistent shape");
    table.push_back({{"name", e.name},
                     {"shape", e.shape},
                     {"offset", offset},
                     {"crc32", tensor_crc(e.value)},
                     {"buffer", e.buffer}});
    offset += static_cast<uint64_t>(e.value.numel()) * sizeof(float);
  }
  meta["tensors"] = table;
  const std::string meta_str = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  const uint8_t version = Checkpoint::kVersion;
  out.write(reinterpret_cast<const char*>(&version), 1);
  const uint64_t meta_len = meta_str.size();
  out.write(reinterpret_cast<const char*>(&meta_len), 8);
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  for (const auto& e : ckpt.entries)
    out.write(reinterpret_cast<const char*>(e.value.data.data()),
              static_cast<std::streamsize>(e.value.data.size() * sizeof(float)));
  if (!out) throw FormatError("write failed for checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  uint8_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 1);
  if (!in || version != Checkpoint::kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  uint64_t meta_len = 0;
  in.read(reinterpret_cast<char*>(&meta_len), 8);
  if (!in) throw FormatError("truncated checkpoint header in " + path);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (in.gcount() != static_cast<std::streamsize>(meta_len)) throw FormatError("truncated checkpoint metadata in " + path);

  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw FormatError("invalid checkpoint metadata JSON in " + path + ": " + e.what());
  }

  // Payload = rest of the file.
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Checkpoint c;
  c.config = meta.value("config", json::object());
  if (!meta.contains("tensors") || !meta["tensors"].is_array())
    throw FormatError("checkpoint metadata lacks tensor table in " + path);
  for (const auto& row : meta["tensors"]) {
    Checkpoint::Entry e;
    try {
      e.name = row.at("name").get<std::string>();
      e.shape = row.at("shape").get<std::vector<int64_t>>();
      e.buffer = row.value("buffer", false);
      const uint64_t offset = row.at("offset").get<uint64_t>();
      const uint32_t crc = row.at("crc32").get<uint32_t>();
      const int64_t numel = Tensor<float>::numel_of(e.shape);
      if (numel < 0) throw FormatError("negative element count for tensor " + e.name);
      const uint64_t bytes = static_cast<uint64_t>(numel) * sizeof(float);
      if (offset + bytes > payload.size())
        throw FormatError("tensor " + e.name + " at offset " + std::to_string(offset) + " exceeds payload size " +
                          std::to_string(payload.size()) + " in " + path);
      e.value = Tensor<float>::zeros(e.shape);
      std::memcpy(e.value.data.data(), payload.data() + offset, bytes);
      if (tensor_crc(e.value) != crc) c.corrupt_tensors.push_back(e.name);
    } catch (const json::exception& ex) {
      throw FormatError("invalid tensor table row in " + path + ": " + ex.what());
    }
    c.entries.push_back(std::move(e));
  }
  return c;
}

}  // namespace dbenet
