#include "dbenet/kdtree.hpp"

#include <algorithm>
#include <cmath>

namespace dbenet {

namespace {

// Ordering used for knn candidates: nearer first, lower id on exact ties.
inline bool cand_less(const std::pair<double, int>& a, const std::pair<double, int>& b) {
  if (a.first != b.first) return a.first < b.first;
  return a.second < b.second;
}

}  // namespace

SpatialIndex::SpatialIndex(std::vector<Vec3> points, int leaf_size)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size)) {
  order_.resize(points_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()));
}

int SpatialIndex::build(int begin, int end) {
  Node n;
  if (end - begin <= leaf_size_) {
    n.begin = begin;
    n.end = end;
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }
  Vec3 lo = points_[static_cast<size_t>(order_[static_cast<size_t>(begin)])];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    const Vec3& p = points_[static_cast<size_t>(order_[static_cast<size_t>(i)])];
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    const double va = points_[static_cast<size_t>(a)][axis], vb = points_[static_cast<size_t>(b)][axis];
    if (va != vb) return va < vb;
    return a < b;  // deterministic partition on duplicate coordinates
  });
  n.axis = axis;
  n.split = points_[static_cast<size_t>(order_[static_cast<size_t>(mid)])][axis];
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<size_t>(self)].left = left;
  nodes_[static_cast<size_t>(self)].right = right;
  return self;
}

std::vector<int> SpatialIndex::knn(const Vec3& query, int k) const {
  if (k < 1) throw InvalidArgument("knn: k must be >= 1");
  if (points_.empty()) return {};
  k = std::min<int64_t>(k, size());
  std::vector<std::pair<double, int>> heap;  // max-heap on cand_less
  heap.reserve(static_cast<size_t>(k) + 1);
  knn_recurse(root_, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), cand_less);
  std::vector<int> out;
  out.reserve(heap.size());
  for (const auto& [d, id] : heap) out.push_back(id);
  return out;
}

void SpatialIndex::knn_recurse(int node, const Vec3& q, int k, std::vector<std::pair<double, int>>& heap) const {
  const Node& n = nodes_[static_cast<size_t>(node)];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int id = order_[static_cast<size_t>(i)];
      const double d2 = (points_[static_cast<size_t>(id)] - q).squaredNorm();
      const std::pair<double, int> cand{d2, id};
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), cand_less);
      } else if (cand_less(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), cand_less);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), cand_less);
      }
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  knn_recurse(near, q, k, heap);
  // The far side can still hold a winner: either the heap is short, or the
  // slab distance beats (or ties) the current worst. Ties must be visited so
  // the lower-id rule sees every equidistant candidate.
  if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().first) knn_recurse(far, q, k, heap);
}

std::vector<int> SpatialIndex::radius_search(const Vec3& query, double r) const {
  if (r <= 0.0) throw InvalidArgument("radius_search: radius must be positive");
  std::vector<int> out;
  if (points_.empty()) return out;
  radius_recurse(root_, query, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

void SpatialIndex::radius_recurse(int node, const Vec3& q, double r2, std::vector<int>& out) const {
  const Node& n = nodes_[static_cast<size_t>(node)];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int id = order_[static_cast<size_t>(i)];
      if ((points_[static_cast<size_t>(id)] - q).squaredNorm() <= r2) out.push_back(id);
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  radius_recurse(near, q, r2, out);
  if (delta * delta <= r2) radius_recurse(far, q, r2, out);
}

}  // namespace dbenet
