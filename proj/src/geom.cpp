#include "dbenet/geom.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <unordered_map>

namespace dbenet {

void PointCloud::check_valid() const {
  for (const auto& p : points)
    if (!p.allFinite()) throw InvalidArgument("point cloud contains non-finite coordinates");
  if (aux_channels > 0 && aux.size() != points.size() * static_cast<size_t>(aux_channels))
    throw InvalidArgument("auxiliary channel count inconsistent with point count");
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  RigidTransform T;
  T.rotation = m.block<3, 3>(0, 0);
  T.translation = m.block<3, 1>(0, 3);
  return T;
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = rotation;
  m.block<3, 1>(0, 3) = translation;
  return m;
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(T.apply(p));
  out.aux = cloud.aux;
  out.aux_channels = cloud.aux_channels;
  return out;
}

RigidTransform compose(const RigidTransform& T1, const RigidTransform& T2) {
  RigidTransform out;
  out.rotation = T1.rotation * T2.rotation;
  out.translation = T1.rotation * T2.translation + T1.translation;
  return out;
}

RigidTransform invert(const RigidTransform& T) {
  RigidTransform out;
  out.rotation = T.rotation.transpose();
  out.translation = -(out.rotation * T.translation);
  return out;
}

namespace {

struct VoxelKeyHash {
  size_t operator()(const Eigen::Vector3i& k) const {
    // FNV-style mix of the three coordinates.
    uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < 3; ++i) {
      h ^= static_cast<uint64_t>(static_cast<uint32_t>(k[i]));
      h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h);
  }
};
struct VoxelKeyEq {
  bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const { return a == b; }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (voxel_size <= 0.0) throw InvalidArgument("voxel_size must be positive");
  const int C = cloud.aux_channels;
  std::unordered_map<Eigen::Vector3i, int, VoxelKeyHash, VoxelKeyEq> slot;
  std::vector<Vec3> sums;
  std::vector<std::vector<double>> aux_sums;
  std::vector<int> counts;
  for (int64_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3i key = voxel_of(cloud.points[static_cast<size_t>(i)], voxel_size);
    auto it = slot.find(key);
    int s;
    if (it == slot.end()) {
      s = static_cast<int>(sums.size());
      slot.emplace(key, s);
      sums.push_back(Vec3::Zero());
      counts.push_back(0);
      if (C > 0) aux_sums.emplace_back(C, 0.0);
    } else {
      s = it->second;
    }
    sums[static_cast<size_t>(s)] += cloud.points[static_cast<size_t>(i)];
    counts[static_cast<size_t>(s)] += 1;
    for (int c = 0; c < C; ++c) aux_sums[static_cast<size_t>(s)][static_cast<size_t>(c)] += cloud.aux_at(i, c);
  }
  PointCloud out;
  out.aux_channels = C;
  out.points.reserve(sums.size());
  for (size_t s = 0; s < sums.size(); ++s) {
    out.points.push_back(sums[s] / counts[s]);
    for (int c = 0; c < C; ++c) out.aux.push_back(aux_sums[s][static_cast<size_t>(c)] / counts[s]);
  }
  return out;
}

RigidTransform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size()) throw InvalidArgument("kabsch: src and dst sizes differ");
  const size_t n = src.size();
  if (n < 3) throw DegenerateInput("kabsch: need at least 3 point pairs, got " + std::to_string(n));

  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (size_t i = 0; i < n; ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(n);
  cd /= static_cast<double>(n);

  Mat3 H = Mat3::Zero();
  for (size_t i = 0; i < n; ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  // Collinear or coincident samples leave the rotation underdetermined.
  if (sv(0) < 1e-15 || sv(1) < 1e-9 * sv(0)) throw DegenerateInput("kabsch: rank-deficient cross-covariance");

  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform T;
  T.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  T.translation = cd - T.rotation * cs;
  return T;
}

}  // namespace dbenet
