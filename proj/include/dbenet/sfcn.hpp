#pragma once

#include <array>
#include <unordered_map>
#include <vector>

#include "dbenet/geom.hpp"
#include "dbenet/model_config.hpp"
#include "dbenet/nn.hpp"

namespace dbenet {

// 3x3x3 kernel offsets in fixed lexicographic (z,y,x) order, giving weight
// tensors a canonical slice layout in checkpoints.
inline constexpr int kKernelVolume = 27;
std::array<Eigen::Vector3i, kKernelVolume> const& kernel_offsets();

struct VoxelKeyHasher {
  size_t operator()(const Eigen::Vector3i& k) const {
    uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < 3; ++i) {
      h ^= static_cast<uint64_t>(static_cast<uint32_t>(k[i]));
      h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h);
  }
};

using CoordMap = std::unordered_map<Eigen::Vector3i, int, VoxelKeyHasher>;

// Voxel occupancy of a cloud: unique integer coordinates in first-occurrence
// order plus the original-point -> voxel-row mapping used to broadcast
// decoded features back to points.
struct Voxelization {
  std::vector<Eigen::Vector3i> coords;
  std::vector<int> point_to_row;
};

Voxelization voxelize_coords(const PointCloud& cloud, double voxel_size);

// Gather pattern of a sparse convolution: per kernel offset, the (out_row,
// in_row) pairs of occupied neighbors.
struct ConvPattern {
  std::vector<Eigen::Vector3i> out_coords;
  int64_t in_rows = 0;
  std::array<std::vector<std::pair<int, int>>, kKernelVolume> pairs;
};

// Output coordinates = input coordinates; neighbor = coord + offset * stride.
ConvPattern conv_pattern_same(const std::vector<Eigen::Vector3i>& coords, int stride);
// Output coordinates = unique floor-div by 2 (in stride units), re-scaled.
ConvPattern conv_pattern_down(const std::vector<Eigen::Vector3i>& coords, int stride);
// Transpose of the down pattern: scatters coarse rows onto supplied finer
// target coordinates (fine stride = coarse stride / 2).
ConvPattern conv_pattern_transpose(const std::vector<Eigen::Vector3i>& coarse, int coarse_stride,
                                   const std::vector<Eigen::Vector3i>& fine_targets);

// Voxel-coordinate-indexed feature rows.
template <typename S>
struct SparseTensor {
  std::vector<Eigen::Vector3i> coords;
  ad::Var<S> features;  // coords.size() x channels
  int stride = 1;
  double voxel_size = 0.0;
};

// One occupied coordinate per voxel with all-ones single-channel features.
template <typename S>
SparseTensor<S> voxelize(ad::Tape<S>& tape, const PointCloud& cloud, double voxel_size,
                         std::vector<int>* point_to_row = nullptr) {
  if (cloud.empty()) throw EmptyInput("voxelize: empty point cloud");
  Voxelization v = voxelize_coords(cloud, voxel_size);
  if (point_to_row) *point_to_row = v.point_to_row;
  SparseTensor<S> st;
  st.features = ad::leaf(tape, Tensor<S>::full({static_cast<int64_t>(v.coords.size()), 1}, S(1)));
  st.coords = std::move(v.coords);
  st.stride = 1;
  st.voxel_size = voxel_size;
  return st;
}

namespace detail {

template <typename S>
void check_conv_weight(const ad::Var<S>& weight, int64_t in_ch, const char* op) {
  const auto& shp = weight.value().shape;
  if (shp.size() != 3 || shp[0] != kKernelVolume || shp[1] != in_ch)
    throw ShapeError(std::string(op) + ": weight shape " + shape_str(shp) + " does not match kernel volume " +
                     std::to_string(kKernelVolume) + " and input width " + std::to_string(in_ch));
}

}  // namespace detail

// Applies a gather pattern: out[o] = sum_k W_k-weighted sums of in rows.
// weight is [27, Cin, Cout]; set `transpose_weight` to apply W_k^T instead
// (then weight is [27, Cfine, Ccoarse] with Cin = Ccoarse).
template <typename S>
ad::Var<S> apply_conv_pattern(ad::Var<S> feats, ad::Var<S> weight, const ConvPattern& pat, bool transpose_weight = false) {
  const int64_t in_ch = feats.cols();
  const auto& wshape = weight.value().shape;
  const int64_t w_rows = wshape[1];
  const int64_t w_cols = wshape[2];
  if (!transpose_weight)
    detail::check_conv_weight(weight, in_ch, "sparse_conv");
  else if (wshape.size() != 3 || wshape[0] != kKernelVolume || w_cols != in_ch)
    throw ShapeError("sparse_conv_transpose: weight shape " + shape_str(wshape) + " does not match input width " +
                     std::to_string(in_ch));
  if (feats.rows() != pat.in_rows)
    throw ShapeError("sparse_conv: feature rows " + std::to_string(feats.rows()) + " vs pattern rows " +
                     std::to_string(pat.in_rows));

  ad::Tape<S>& tape = *feats.tape;
  const int64_t out_rows = static_cast<int64_t>(pat.out_coords.size());
  const int64_t out_ch = transpose_weight ? w_rows : w_cols;
  ad::Var<S> w2d = ad::reshape(weight, {kKernelVolume * w_rows, w_cols});
  ad::Var<S> acc = ad::leaf(tape, Tensor<S>::zeros({out_rows, out_ch}));
  for (int k = 0; k < kKernelVolume; ++k) {
    const auto& pk = pat.pairs[static_cast<size_t>(k)];
    if (pk.empty()) continue;
    std::vector<int> in_idx, out_idx;
    in_idx.reserve(pk.size());
    out_idx.reserve(pk.size());
    for (const auto& [o, i] : pk) {
      out_idx.push_back(o);
      in_idx.push_back(i);
    }
    std::vector<int> w_idx(static_cast<size_t>(w_rows));
    for (int64_t r = 0; r < w_rows; ++r) w_idx[static_cast<size_t>(r)] = static_cast<int>(k * w_rows + r);
    ad::Var<S> wk = ad::gather_rows(w2d, w_idx);  // [w_rows, w_cols]
    if (transpose_weight) wk = ad::transpose(wk);
    ad::Var<S> contrib = ad::matmul(ad::gather_rows(feats, in_idx), wk);
    acc = ad::add(acc, ad::scatter_sum_rows(contrib, out_idx, out_rows));
  }
  return acc;
}

// stride 1 keeps the coordinate set; stride 2 floor-divides coordinates.
template <typename S>
SparseTensor<S> sparse_conv(const SparseTensor<S>& st, ad::Var<S> weight, int stride = 1) {
  if (stride != 1 && stride != 2) throw InvalidArgument("sparse_conv: stride must be 1 or 2");
  ConvPattern pat = stride == 1 ? conv_pattern_same(st.coords, st.stride) : conv_pattern_down(st.coords, st.stride);
  SparseTensor<S> out;
  out.features = apply_conv_pattern(st.features, weight, pat);
  out.coords = std::move(pat.out_coords);
  out.stride = st.stride * stride;
  out.voxel_size = st.voxel_size;
  return out;
}

// Upsampling onto a supplied finer coordinate set (the matching encoder
// level); weight is applied transposed.
template <typename S>
SparseTensor<S> sparse_conv_transpose(const SparseTensor<S>& st, ad::Var<S> weight,
                                      const std::vector<Eigen::Vector3i>& target_coords) {
  if (st.stride % 2 != 0) throw InvalidArgument("sparse_conv_transpose: input stride must be even");
  ConvPattern pat = conv_pattern_transpose(st.coords, st.stride, target_coords);
  SparseTensor<S> out;
  out.features = apply_conv_pattern(st.features, weight, pat, /*transpose_weight=*/true);
  out.coords = pat.out_coords;
  out.stride = st.stride / 2;
  out.voxel_size = st.voxel_size;
  return out;
}

// Geometry of one encoder level plus its precomputed gather patterns.
struct VoxelLevel {
  std::vector<Eigen::Vector3i> coords;
  int stride = 1;
  ConvPattern same;  // stride-1 convolution at this level
  ConvPattern down;  // stride-2 convolution onto the next level
};

struct VoxelPyramid {
  double voxel_size = 0.0;
  std::vector<VoxelLevel> levels;
  std::vector<int> point_to_row;  // original point -> level-0 row

  int64_t coarse_count() const { return static_cast<int64_t>(levels.back().coords.size()); }
};

VoxelPyramid build_voxel_pyramid(const PointCloud& cloud, double voxel_size, int levels);

// ---- SFCN parameter layout ----

template <typename S>
void init_sfcn_params(ParamStore<S>& store, const SfcnConfig& cfg, Rng& rng) {
  const auto& w = cfg.widths;
  auto conv_weight = [&](const std::string& name, int cin, int cout) {
    store.add(name, uniform_init<S>({kKernelVolume, cin, cout}, static_cast<int64_t>(kKernelVolume) * cin, rng));
  };
  conv_weight("sfcn.encoder.stem.weight", 1, w[0]);
  init_norm_params(store, "sfcn.encoder.stem.norm", w[0]);
  for (int l = 0; l < cfg.levels(); ++l) {
    const std::string base = "sfcn.encoder.lvl" + std::to_string(l);
    if (l > 0) {
      conv_weight(base + ".down.weight", w[static_cast<size_t>(l - 1)], w[static_cast<size_t>(l)]);
      init_norm_params(store, base + ".down.norm", w[static_cast<size_t>(l)]);
    }
    conv_weight(base + ".res.conv1.weight", w[static_cast<size_t>(l)], w[static_cast<size_t>(l)]);
    init_norm_params(store, base + ".res.norm1", w[static_cast<size_t>(l)]);
    conv_weight(base + ".res.conv2.weight", w[static_cast<size_t>(l)], w[static_cast<size_t>(l)]);
    init_norm_params(store, base + ".res.norm2", w[static_cast<size_t>(l)]);
  }
  for (int l = cfg.levels() - 1; l >= 1; --l) {
    const std::string base = "sfcn.decoder.up" + std::to_string(l);
    // Transpose-conv weights mirror the forward layout [27, fine, coarse].
    store.add(base + ".weight", uniform_init<S>({kKernelVolume, w[static_cast<size_t>(l - 1)], w[static_cast<size_t>(l)]},
                                                static_cast<int64_t>(kKernelVolume) * w[static_cast<size_t>(l)], rng));
    init_norm_params(store, base + ".norm", w[static_cast<size_t>(l - 1)]);
  }
  conv_weight("sfcn.decoder.final.weight", w[0], cfg.d_out);
}

// ---- SFCN forward ----

template <typename S>
struct SfcnEncodeOut {
  ad::Var<S> coarse;              // N' x d_enc
  std::vector<ad::Var<S>> skips;  // per-level residual outputs
};

template <typename S>
ad::Var<S> sfcn_res_block(TapeBinding<S>& bind, ParamStore<S>& store, const std::string& base, ad::Var<S> x,
                          const VoxelLevel& lvl, const ForwardMode& mode) {
  ad::Var<S> y = apply_conv_pattern(x, bind(base + ".conv1.weight"), lvl.same);
  y = ad::relu(norm_forward(bind, store, base + ".norm1", y, mode));
  y = apply_conv_pattern(y, bind(base + ".conv2.weight"), lvl.same);
  y = norm_forward(bind, store, base + ".norm2", y, mode);
  return ad::relu(ad::add(x, y));
}

template <typename S>
SfcnEncodeOut<S> sfcn_encode(ad::Tape<S>& tape, TapeBinding<S>& bind, ParamStore<S>& store, const SfcnConfig& cfg,
                             const VoxelPyramid& pyr, const ForwardMode& mode) {
  if (pyr.levels.size() != static_cast<size_t>(cfg.levels()))
    throw InvalidArgument("sfcn_encode: pyramid level count mismatch");
  SfcnEncodeOut<S> out;
  ad::Var<S> x = ad::leaf(tape, Tensor<S>::full({static_cast<int64_t>(pyr.levels[0].coords.size()), 1}, S(1)));
  x = apply_conv_pattern(x, bind("sfcn.encoder.stem.weight"), pyr.levels[0].same);
  x = ad::relu(norm_forward(bind, store, "sfcn.encoder.stem.norm", x, mode));
  for (int l = 0; l < cfg.levels(); ++l) {
    const std::string base = "sfcn.encoder.lvl" + std::to_string(l);
    if (l > 0) {
      x = apply_conv_pattern(x, bind(base + ".down.weight"), pyr.levels[static_cast<size_t>(l - 1)].down);
      x = ad::relu(norm_forward(bind, store, base + ".down.norm", x, mode));
    }
    x = sfcn_res_block(bind, store, base + ".res", x, pyr.levels[static_cast<size_t>(l)], mode);
    out.skips.push_back(x);
  }
  out.coarse = out.skips.back();
  return out;
}

// Decodes fused coarse features back to one unit-norm descriptor per
// original point.
template <typename S>
ad::Var<S> sfcn_decode(TapeBinding<S>& bind, ParamStore<S>& store, const SfcnConfig& cfg, const VoxelPyramid& pyr,
                       const SfcnEncodeOut<S>& enc, ad::Var<S> fused, const ForwardMode& mode) {
  if (fused.rows() != pyr.coarse_count())
    throw InvalidArgument("sfcn_decode: fused rows " + std::to_string(fused.rows()) + " vs coarsest count " +
                          std::to_string(pyr.coarse_count()));
  ad::Var<S> y = fused;
  for (int l = cfg.levels() - 1; l >= 1; --l) {
    const std::string base = "sfcn.decoder.up" + std::to_string(l);
    ConvPattern pat = conv_pattern_transpose(pyr.levels[static_cast<size_t>(l)].coords,
                                             pyr.levels[static_cast<size_t>(l)].stride,
                                             pyr.levels[static_cast<size_t>(l - 1)].coords);
    y = apply_conv_pattern(y, bind(base + ".weight"), pat, /*transpose_weight=*/true);
    y = ad::relu(norm_forward(bind, store, base + ".norm", y, mode));
    y = ad::add(y, enc.skips[static_cast<size_t>(l - 1)]);
  }
  y = apply_conv_pattern(y, bind("sfcn.decoder.final.weight"), pyr.levels[0].same);
  ad::Var<S> per_point = ad::gather_rows(y, pyr.point_to_row);
  return ad::l2_normalize_rows(per_point);
}

}  // namespace dbenet
