#pragma once

#include <vector>

#include "dbenet/geom.hpp"

namespace dbenet {

// Balanced kd-tree over a fixed point set. Immutable after construction and
// safe for concurrent queries. Ties in knn break toward the lower point id;
// radius results come back sorted by id, matching the brute-force oracle.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::vector<Vec3> points, int leaf_size = 16);

  int64_t size() const { return static_cast<int64_t>(points_.size()); }
  const std::vector<Vec3>& points() const { return points_; }

  // k nearest by Euclidean distance; k > size() returns all points.
  std::vector<int> knn(const Vec3& query, int k) const;

  // All ids with distance <= r, sorted by id.
  std::vector<int> radius_search(const Vec3& query, double r) const;

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end);
  void knn_recurse(int node, const Vec3& q, int k, std::vector<std::pair<double, int>>& heap) const;
  void radius_recurse(int node, const Vec3& q, double r2, std::vector<int>& out) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
  int leaf_size_;
};

}  // namespace dbenet
