#pragma once

#include <string>

#include "dbenet/params.hpp"

namespace dbenet {

// Controls normalization behavior during a forward pass. Unfrozen layers in
// training mode normalize with batch statistics; frozen layers and inference
// use the stored running statistics, so freezing a branch freezes its
// statistics too.
struct ForwardMode {
  bool training = false;
  bool update_stats = false;  // write running stats (training only)
  const FreezeMask* freeze = nullptr;

  bool use_batch_stats(const std::string& prefix) const {
    if (!training) return false;
    return freeze == nullptr || !freeze->matches(prefix);
  }
  bool should_update(const std::string& prefix) const { return update_stats && use_batch_stats(prefix); }
};

inline constexpr double kNormEps = 1e-5;
inline constexpr double kNormMomentum = 0.9;

template <typename S>
void init_norm_params(ParamStore<S>& store, const std::string& prefix, int channels) {
  store.add(prefix + ".gamma", Tensor<S>::full({1, channels}, S(1)));
  store.add(prefix + ".beta", Tensor<S>::zeros({1, channels}));
  store.add(prefix + ".running_mean", Tensor<S>::zeros({1, channels}), ParamKind::Buffer);
  store.add(prefix + ".running_var", Tensor<S>::full({1, channels}, S(1)), ParamKind::Buffer);
}

// Per-channel scale/shift normalization over rows.
template <typename S>
ad::Var<S> norm_forward(TapeBinding<S>& bind, ParamStore<S>& store, const std::string& prefix, ad::Var<S> x,
                        const ForwardMode& mode) {
  ad::Tape<S>& tape = *x.tape;
  const int64_t n = x.rows();
  const int64_t c = x.cols();
  ad::Var<S> gamma = bind(prefix + ".gamma");
  ad::Var<S> beta = bind(prefix + ".beta");

  ad::Var<S> normalized;
  if (mode.use_batch_stats(prefix)) {
    if (n == 0) throw EmptyInput("norm_forward: empty input at " + prefix);
    ad::Var<S> mean = ad::scale(ad::col_sum(x), S(1) / static_cast<S>(n));
    ad::Var<S> centered = ad::add_rowvec(x, ad::scale(mean, S(-1)));
    ad::Var<S> var = ad::scale(ad::col_sum(ad::mul(centered, centered)), S(1) / static_cast<S>(n));
    ad::Var<S> inv_std = ad::recip_elem(ad::sqrt_elem(ad::add_scalar(var, static_cast<S>(kNormEps))));
    normalized = ad::mul_rowvec(centered, inv_std);
    if (mode.should_update(prefix)) {
      Tensor<S>& rm = store.get(prefix + ".running_mean").value;
      Tensor<S>& rv = store.get(prefix + ".running_var").value;
      const Tensor<S>& bm = mean.value();
      const Tensor<S>& bv = var.value();
      for (int64_t i = 0; i < c; ++i) {
        rm.data[static_cast<size_t>(i)] = static_cast<S>(kNormMomentum) * rm.data[static_cast<size_t>(i)] +
                                          static_cast<S>(1 - kNormMomentum) * bm.data[static_cast<size_t>(i)];
        rv.data[static_cast<size_t>(i)] = static_cast<S>(kNormMomentum) * rv.data[static_cast<size_t>(i)] +
                                          static_cast<S>(1 - kNormMomentum) * bv.data[static_cast<size_t>(i)];
      }
    }
  } else {
    // Constants on the tape; gradients flow only through x, gamma, beta.
    const Tensor<S>& rm = store.get(prefix + ".running_mean").value;
    const Tensor<S>& rv = store.get(prefix + ".running_var").value;
    Tensor<S> neg_mean = rm;
    for (S& v : neg_mean.data) v = -v;
    Tensor<S> inv_std = rv;
    for (S& v : inv_std.data) v = S(1) / std::sqrt(v + static_cast<S>(kNormEps));
    normalized = ad::mul_rowvec(ad::add_rowvec(x, ad::leaf(tape, std::move(neg_mean))), ad::leaf(tape, std::move(inv_std)));
  }
  return ad::add_rowvec(ad::mul_rowvec(normalized, gamma), beta);
}

}  // namespace dbenet
