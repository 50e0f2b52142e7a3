#include "dbenet/manifest.hpp"

#include <fstream>

#include <json.hpp>

namespace dbenet {

using nlohmann::json;

std::vector<PairManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest: " + path);
  std::vector<PairManifestEntry> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("manifest " + path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    PairManifestEntry e;
    try {
      e.src = j.at("src").get<std::string>();
      e.dst = j.at("dst").get<std::string>();
      e.scene = j.at("scene").get<std::string>();
      e.overlap = j.at("overlap").get<double>();
      const auto m = j.at("t_gt").get<std::vector<double>>();
      if (m.size() != 16)
        throw FormatError("manifest " + path + " line " + std::to_string(lineno) + ": t_gt must have 16 entries");
      Mat4 mat;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) mat(r, c) = m[static_cast<size_t>(r * 4 + c)];
      e.t_gt = RigidTransform::from_matrix(mat);
    } catch (const json::exception& ex) {
      throw FormatError("manifest " + path + " line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (!e.t_gt.is_valid(1e-6))
      throw FormatError("manifest " + path + " line " + std::to_string(lineno) + ": t_gt rotation is not orthonormal");
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::vector<PairManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open manifest for writing: " + path);
  for (const auto& e : entries) {
    const Mat4 m = e.t_gt.matrix();
    std::vector<double> flat(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) flat[static_cast<size_t>(r * 4 + c)] = m(r, c);
    json j{{"src", e.src}, {"dst", e.dst}, {"t_gt", flat}, {"scene", e.scene}, {"overlap", e.overlap}};
    out << j.dump() << "\n";
  }
  if (!out) throw FormatError("write failed for manifest: " + path);
}

}  // namespace dbenet
