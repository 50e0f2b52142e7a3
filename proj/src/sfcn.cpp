#include "dbenet/sfcn.hpp"

namespace dbenet {

namespace {

// Round-toward-minus-infinity division.
inline int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Eigen::Vector3i downscale(const Eigen::Vector3i& c, int stride) {
  const int s2 = 2 * stride;
  return Eigen::Vector3i(floor_div(c.x(), s2) * s2, floor_div(c.y(), s2) * s2, floor_div(c.z(), s2) * s2);
}

CoordMap build_coord_map(const std::vector<Eigen::Vector3i>& coords) {
  CoordMap map;
  map.reserve(coords.size() * 2);
  for (size_t i = 0; i < coords.size(); ++i) map.emplace(coords[i], static_cast<int>(i));
  return map;
}

}  // namespace

const std::array<Eigen::Vector3i, kKernelVolume>& kernel_offsets() {
  static const std::array<Eigen::Vector3i, kKernelVolume> offsets = [] {
    std::array<Eigen::Vector3i, kKernelVolume> o;
    int k = 0;
    for (int z = -1; z <= 1; ++z)
      for (int y = -1; y <= 1; ++y)
        for (int x = -1; x <= 1; ++x) o[static_cast<size_t>(k++)] = Eigen::Vector3i(x, y, z);
    return o;
  }();
  return offsets;
}

Voxelization voxelize_coords(const PointCloud& cloud, double voxel_size) {
  if (cloud.empty()) throw EmptyInput("voxelize: empty point cloud");
  if (voxel_size <= 0.0) throw InvalidArgument("voxelize: voxel_size must be positive");
  Voxelization v;
  v.point_to_row.resize(static_cast<size_t>(cloud.size()));
  CoordMap map;
  map.reserve(cloud.points.size() * 2);
  for (int64_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3i key = voxel_of(cloud.points[static_cast<size_t>(i)], voxel_size);
    auto [it, inserted] = map.emplace(key, static_cast<int>(v.coords.size()));
    if (inserted) v.coords.push_back(key);
    v.point_to_row[static_cast<size_t>(i)] = it->second;
  }
  return v;
}

ConvPattern conv_pattern_same(const std::vector<Eigen::Vector3i>& coords, int stride) {
  ConvPattern pat;
  pat.out_coords = coords;
  pat.in_rows = static_cast<int64_t>(coords.size());
  const CoordMap map = build_coord_map(coords);
  const auto& offsets = kernel_offsets();
  for (int k = 0; k < kKernelVolume; ++k) {
    auto& pk = pat.pairs[static_cast<size_t>(k)];
    const Eigen::Vector3i step = offsets[static_cast<size_t>(k)] * stride;
    for (size_t r = 0; r < coords.size(); ++r) {
      auto it = map.find(coords[r] + step);
      if (it != map.end()) pk.emplace_back(static_cast<int>(r), it->second);
    }
  }
  return pat;
}

ConvPattern conv_pattern_down(const std::vector<Eigen::Vector3i>& coords, int stride) {
  ConvPattern pat;
  pat.in_rows = static_cast<int64_t>(coords.size());
  CoordMap out_map;
  for (const auto& c : coords) {
    const Eigen::Vector3i d = downscale(c, stride);
    if (out_map.emplace(d, static_cast<int>(pat.out_coords.size())).second) pat.out_coords.push_back(d);
  }
  const CoordMap in_map = build_coord_map(coords);
  const auto& offsets = kernel_offsets();
  for (int k = 0; k < kKernelVolume; ++k) {
    auto& pk = pat.pairs[static_cast<size_t>(k)];
    const Eigen::Vector3i step = offsets[static_cast<size_t>(k)] * stride;
    for (size_t r = 0; r < pat.out_coords.size(); ++r) {
      auto it = in_map.find(pat.out_coords[r] + step);
      if (it != in_map.end()) pk.emplace_back(static_cast<int>(r), it->second);
    }
  }
  return pat;
}

ConvPattern conv_pattern_transpose(const std::vector<Eigen::Vector3i>& coarse, int coarse_stride,
                                   const std::vector<Eigen::Vector3i>& fine_targets) {
  ConvPattern pat;
  pat.out_coords = fine_targets;
  pat.in_rows = static_cast<int64_t>(coarse.size());
  const int fine_stride = coarse_stride / 2;
  const CoordMap fine_map = build_coord_map(fine_targets);
  const auto& offsets = kernel_offsets();
  for (int k = 0; k < kKernelVolume; ++k) {
    auto& pk = pat.pairs[static_cast<size_t>(k)];
    const Eigen::Vector3i step = offsets[static_cast<size_t>(k)] * fine_stride;
    for (size_t r = 0; r < coarse.size(); ++r) {
      auto it = fine_map.find(coarse[r] + step);
      if (it != fine_map.end()) pk.emplace_back(it->second, static_cast<int>(r));
    }
  }
  return pat;
}

VoxelPyramid build_voxel_pyramid(const PointCloud& cloud, double voxel_size, int levels) {
  if (levels < 1) throw InvalidArgument("build_voxel_pyramid: levels must be >= 1");
  Voxelization v = voxelize_coords(cloud, voxel_size);
  VoxelPyramid pyr;
  pyr.voxel_size = voxel_size;
  pyr.point_to_row = std::move(v.point_to_row);
  std::vector<Eigen::Vector3i> coords = std::move(v.coords);
  int stride = 1;
  for (int l = 0; l < levels; ++l) {
    VoxelLevel lvl;
    lvl.coords = coords;
    lvl.stride = stride;
    lvl.same = conv_pattern_same(lvl.coords, stride);
    if (l + 1 < levels) {
      lvl.down = conv_pattern_down(lvl.coords, stride);
      coords = lvl.down.out_coords;
      stride *= 2;
    }
    pyr.levels.push_back(std::move(lvl));
  }
  return pyr;
}

}  // namespace dbenet
