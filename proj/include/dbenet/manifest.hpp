#pragma once

#include <string>
#include <vector>

#include "dbenet/geom.hpp"

namespace dbenet {

// One registration pair: fragment paths (relative to the manifest file),
// ground-truth transform, scene id and achieved overlap fraction.
struct PairManifestEntry {
  std::string src;
  std::string dst;
  RigidTransform t_gt;
  std::string scene;
  double overlap = 0.0;
};

// Line-delimited JSON with fixed field names (src, dst, t_gt, scene,
// overlap); t_gt is the 4x4 matrix row-major. Round trips are exact.
std::vector<PairManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<PairManifestEntry>& entries, const std::string& path);

}  // namespace dbenet
