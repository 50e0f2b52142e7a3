#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dbenet/common.hpp"

namespace dbenet {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Point set in meters with optional per-point auxiliary channels in [0,1]
// (the stand-in for a second modality's texture signal).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> aux;  // row-major n x aux_channels
  int aux_channels = 0;

  int64_t size() const { return static_cast<int64_t>(points.size()); }
  bool empty() const { return points.empty(); }

  double aux_at(int64_t i, int c) const { return aux[static_cast<size_t>(i * aux_channels + c)]; }

  void check_valid() const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4& m);
  Mat4 matrix() const;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  // Orthonormal within tol and det = +1 within tol.
  bool is_valid(double tol = 1e-9) const;
};

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T);

// compose(T1, T2) applies T2 first, then T1.
RigidTransform compose(const RigidTransform& T1, const RigidTransform& T2);
RigidTransform invert(const RigidTransform& T);

// One point per occupied voxel at the member centroid; auxiliary channels
// averaged. Membership by floor(coordinate / voxel_size) per axis, so points
// exactly on a boundary land in the higher-index voxel. Output order is
// first-occurrence order of each voxel.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

// Least-squares rigid fit (SVD with reflection correction, det always +1).
// Throws DegenerateInput for <3 pairs or a rank-deficient cross-covariance
// (collinear or coincident samples).
RigidTransform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

inline Eigen::Vector3i voxel_of(const Vec3& p, double voxel_size) {
  return Eigen::Vector3i(static_cast<int>(std::floor(p.x() / voxel_size)),
                         static_cast<int>(std::floor(p.y() / voxel_size)),
                         static_cast<int>(std::floor(p.z() / voxel_size)));
}

}  // namespace dbenet
