#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dbenet/common.hpp"

namespace dbenet {

// Dense row-major tensor. Network math runs with S = float, gradient checks
// with S = double. Mostly used in 2-D form; kernel weights keep their 3-D
// shape for checkpoints and are viewed as 2-D on the tape.
template <typename S>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<S> data;

  Tensor() = default;
  Tensor(std::vector<int64_t> shp, std::vector<S> d) : shape(std::move(shp)), data(std::move(d)) {
    if (numel_of(shape) != static_cast<int64_t>(data.size()))
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
  }

  static int64_t numel_of(const std::vector<int64_t>& shp) {
    int64_t n = 1;
    for (int64_t d : shp) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int64_t> shp) {
    const int64_t n = numel_of(shp);
    return Tensor(std::move(shp), std::vector<S>(static_cast<size_t>(n), S(0)));
  }
  static Tensor full(std::vector<int64_t> shp, S v) {
    const int64_t n = numel_of(shp);
    return Tensor(std::move(shp), std::vector<S>(static_cast<size_t>(n), v));
  }
  static Tensor scalar(S v) { return Tensor({1, 1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  bool is_scalar() const { return numel() == 1; }

  // 2-D accessors; a tensor of rank r >= 2 is viewed as (prod of leading
  // dims) x (last dim), rank 1 as 1 x n.
  int64_t cols() const {
    if (shape.empty()) return 1;
    return shape.back();
  }
  int64_t rows() const {
    const int64_t c = cols();
    return c == 0 ? 0 : numel() / c;
  }
  S& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
  S at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (S v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
    return out;
  }
};

template <typename S>
using EigenMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
Eigen::Map<const EigenMat<S>> as_mat(const Tensor<S>& t) {
  return Eigen::Map<const EigenMat<S>>(t.data.data(), t.rows(), t.cols());
}

template <typename S>
Eigen::Map<EigenMat<S>> as_mat(Tensor<S>& t) {
  return Eigen::Map<EigenMat<S>>(t.data.data(), t.rows(), t.cols());
}

}  // namespace dbenet
