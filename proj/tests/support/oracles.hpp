#pragma once

// Brute-force reference implementations kept independent of the library's
// algorithmic paths. Tests compare library output against these.

#include <algorithm>
#include <vector>

#include "dbenet/geom.hpp"
#include "dbenet/rng.hpp"

namespace dbenet::oracle {

// Exhaustive k-nearest scan with (distance, id) lexicographic ordering.
inline std::vector<int> knn_brute(const std::vector<Vec3>& pts, const Vec3& q, int k) {
  std::vector<std::pair<double, int>> all;
  all.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - q).squaredNorm(), static_cast<int>(i));
  std::sort(all.begin(), all.end());
  std::vector<int> out;
  for (int i = 0; i < std::min<int>(k, static_cast<int>(all.size())); ++i) out.push_back(all[static_cast<size_t>(i)].second);
  return out;
}

inline std::vector<int> radius_brute(const std::vector<Vec3>& pts, const Vec3& q, double r) {
  std::vector<int> out;
  for (size_t i = 0; i < pts.size(); ++i)
    if ((pts[i] - q).squaredNorm() <= r * r) out.push_back(static_cast<int>(i));
  return out;
}

inline std::vector<Vec3> random_points(Rng& rng, int n, double extent = 1.0) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    pts.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent));
  return pts;
}

// Random rotation via normalized quaternion from four gaussians.
inline Mat3 random_rotation(Rng& rng) {
  Eigen::Vector4d q(rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian());
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline RigidTransform random_transform(Rng& rng, double t_extent = 1.0) {
  RigidTransform T;
  T.rotation = random_rotation(rng);
  T.translation = Vec3(rng.uniform(-t_extent, t_extent), rng.uniform(-t_extent, t_extent), rng.uniform(-t_extent, t_extent));
  return T;
}

}  // namespace dbenet::oracle
