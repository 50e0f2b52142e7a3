#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "dbenet/tensor.hpp"

namespace dbenet::ad {

// When enabled, every op verifies its output is finite and throws otherwise.
void set_finite_checks(bool on);
bool finite_checks_enabled();

// Test-harness hook: skews the relu backward rule so the finite-difference
// checker can be shown to catch a broken gradient. Never set outside tests.
void set_backward_fault_injection(bool on);
bool backward_fault_injected();

// Append-only record of executed ops. Node ids are topological by
// construction; backward walks ids in reverse and visits each node once.
template <typename S>
class Tape {
 public:
  // Receives the node's output gradient, accumulates into its parents'.
  using Vjp = std::function<void(Tape&, const Tensor<S>&)>;

  int push(Tensor<S> value, Vjp vjp = nullptr) {
    if (finite_checks_enabled() && !value.all_finite())
      throw InternalError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
    nodes_.push_back(Node{std::move(value), std::move(vjp)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Tensor<S>& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Reverse-mode accumulation from `loss_id` (a 1x1 node).
  void backward(int loss_id) {
    const Tensor<S>& loss = value(loss_id);
    if (!loss.is_scalar())
      throw InvalidArgument("backward requires a scalar loss, got shape " + shape_str(loss.shape));
    grads_.assign(nodes_.size(), Tensor<S>());
    grads_[static_cast<size_t>(loss_id)] = Tensor<S>::full(loss.shape, S(1));
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (n.vjp && grads_[static_cast<size_t>(id)].numel() > 0) n.vjp(*this, grads_[static_cast<size_t>(id)]);
    }
  }

  bool has_grad(int id) const {
    return id < static_cast<int>(grads_.size()) && grads_[static_cast<size_t>(id)].numel() > 0;
  }

  // Gradient of the last backward() w.r.t. node `id`; zeros if the node did
  // not influence the loss.
  Tensor<S> grad(int id) const {
    if (has_grad(id)) return grads_[static_cast<size_t>(id)];
    return Tensor<S>::zeros(value(id).shape);
  }

  void accumulate_grad(int id, Tensor<S> g) {
    Tensor<S>& slot = grads_[static_cast<size_t>(id)];
    if (slot.numel() == 0) {
      slot = std::move(g);
      return;
    }
    for (size_t i = 0; i < slot.data.size(); ++i) slot.data[i] += g.data[i];
  }

 private:
  struct Node {
    Tensor<S> value;
    Vjp vjp;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor<S>> grads_;
};

// Lightweight handle pairing a tape with a node id.
template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  int id = -1;

  const Tensor<S>& value() const { return tape->value(id); }
  const std::vector<int64_t>& shape() const { return value().shape; }
  int64_t rows() const { return value().rows(); }
  int64_t cols() const { return value().cols(); }
};

template <typename S>
Var<S> leaf(Tape<S>& t, Tensor<S> v) {
  return Var<S>{&t, t.push(std::move(v))};
}

namespace detail {

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape) + " and " + shape_str(b.shape) + " differ");
}

}  // namespace detail

// ---- arithmetic ----

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::require_same_shape(a.value(), b.value(), "add");
  Tensor<S> out = a.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.value().data[i];
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate_grad(ai, g);
    tp.accumulate_grad(bi, g);
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  detail::require_same_shape(a.value(), b.value(), "sub");
  Tensor<S> out = a.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.value().data[i];
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate_grad(ai, g);
    Tensor<S> gb = g;
    for (S& v : gb.data) v = -v;
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

// Elementwise product, same shapes.
template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  detail::require_same_shape(a.value(), b.value(), "mul");
  Tensor<S> out = a.value();
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.value().data[i];
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va = tp.value(ai);
    const Tensor<S>& vb = tp.value(bi);
    Tensor<S> ga = g, gb = g;
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] *= vb.data[i];
      gb.data[i] *= va.data[i];
    }
    tp.accumulate_grad(ai, std::move(ga));
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> scale(Var<S> a, S c) {
  Tensor<S> out = a.value();
  for (S& v : out.data) v *= c;
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai, c](Tape<S>& tp, const Tensor<S>& g) {
    Tensor<S> ga = g;
    for (S& v : ga.data) v *= c;
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> add_scalar(Var<S> a, S c) {
  Tensor<S> out = a.value();
  for (S& v : out.data) v += c;
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) { tp.accumulate_grad(ai, g); });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> relu(Var<S> a) {
  Tensor<S> out = a.value();
  for (S& v : out.data) v = v > S(0) ? v : S(0);
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va = tp.value(ai);
    Tensor<S> ga = g;
    const S fault = backward_fault_injected() ? S(1.001) : S(1);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] = va.data[i] > S(0) ? ga.data[i] * fault : S(0);
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// sqrt; the subgradient at 0 is taken as 0 (hinge losses clamp there anyway).
template <typename S>
Var<S> sqrt_elem(Var<S> a) {
  Tensor<S> out = a.value();
  for (S& v : out.data) v = std::sqrt(std::max(v, S(0)));
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  const int self = t.size();
  int id = t.push(std::move(out), [ai, self](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& y = tp.value(self);
    Tensor<S> ga = g;
    for (size_t i = 0; i < ga.data.size(); ++i)
      ga.data[i] = y.data[i] > S(0) ? ga.data[i] / (S(2) * y.data[i]) : S(0);
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// Natural log; inputs must be positive (softmax outputs in practice).
template <typename S>
Var<S> log_elem(Var<S> a) {
  Tensor<S> out = a.value();
  for (S& v : out.data) v = std::log(v);
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va = tp.value(ai);
    Tensor<S> ga = g;
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= va.data[i];
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> recip_elem(Var<S> a) {
  Tensor<S> out = a.value();
  for (S& v : out.data) v = S(1) / v;
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  const int self = t.size();
  int id = t.push(std::move(out), [ai, self](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& y = tp.value(self);
    Tensor<S> ga = g;
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= -y.data[i] * y.data[i];
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// ---- matrix ops ----

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  const Tensor<S>& va = a.value();
  const Tensor<S>& vb = b.value();
  if (va.cols() != vb.rows())
    throw ShapeError("matmul: shapes " + shape_str(va.shape) + " and " + shape_str(vb.shape) + " are incompatible");
  Tensor<S> out = Tensor<S>::zeros({va.rows(), vb.cols()});
  as_mat(out) = as_mat(va) * as_mat(vb);
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    const Tensor<S>& vb2 = tp.value(bi);
    Tensor<S> ga = Tensor<S>::zeros(va2.shape);
    Tensor<S> gb = Tensor<S>::zeros(vb2.shape);
    as_mat(ga) = as_mat(g) * as_mat(vb2).transpose();
    as_mat(gb) = as_mat(va2).transpose() * as_mat(g);
    tp.accumulate_grad(ai, std::move(ga));
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> transpose(Var<S> a) {
  const Tensor<S>& va = a.value();
  Tensor<S> out = Tensor<S>::zeros({va.cols(), va.rows()});
  as_mat(out) = as_mat(va).transpose();
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) {
    Tensor<S> ga = Tensor<S>::zeros(tp.value(ai).shape);
    as_mat(ga) = as_mat(g).transpose();
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// Zero-copy-in-spirit reshape; total element count must match.
template <typename S>
Var<S> reshape(Var<S> a, std::vector<int64_t> new_shape) {
  const Tensor<S>& va = a.value();
  if (Tensor<S>::numel_of(new_shape) != va.numel())
    throw ShapeError("reshape: cannot view " + shape_str(va.shape) + " as " + shape_str(new_shape));
  Tensor<S> out(new_shape, va.data);
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) {
    Tensor<S> ga(tp.value(ai).shape, g.data);
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// ---- row/column structure ops ----

template <typename S>
Var<S> softmax_rows(Var<S> a) {
  const Tensor<S>& va = a.value();
  if (va.cols() == 0) throw InvalidArgument("softmax_rows: empty rows (0 columns)");
  Tensor<S> out = va;
  const int64_t R = va.rows(), C = va.cols();
  for (int64_t r = 0; r < R; ++r) {
    S mx = out.at(r, 0);
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, out.at(r, c));
    S sum = S(0);
    for (int64_t c = 0; c < C; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int64_t c = 0; c < C; ++c) out.at(r, c) /= sum;
  }
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  const int self = t.size();
  int id = t.push(std::move(out), [ai, self](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& y = tp.value(self);
    Tensor<S> ga = g;
    const int64_t R2 = y.rows(), C2 = y.cols();
    for (int64_t r = 0; r < R2; ++r) {
      S dot = S(0);
      for (int64_t c = 0; c < C2; ++c) dot += g.at(r, c) * y.at(r, c);
      for (int64_t c = 0; c < C2; ++c) ga.at(r, c) = y.at(r, c) * (g.at(r, c) - dot);
    }
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// Rows scaled to unit L2 norm; zero rows stay zero and get zero gradient.
template <typename S>
Var<S> l2_normalize_rows(Var<S> a) {
  const Tensor<S>& va = a.value();
  Tensor<S> out = va;
  const int64_t R = va.rows(), C = va.cols();
  std::vector<S> norms(static_cast<size_t>(R), S(0));
  for (int64_t r = 0; r < R; ++r) {
    S s = S(0);
    for (int64_t c = 0; c < C; ++c) s += va.at(r, c) * va.at(r, c);
    const S n = std::sqrt(s);
    norms[static_cast<size_t>(r)] = n;
    if (n > S(0))
      for (int64_t c = 0; c < C; ++c) out.at(r, c) /= n;
  }
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  const int self = t.size();
  int id = t.push(std::move(out), [ai, self, norms](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& y = tp.value(self);
    Tensor<S> ga = g;
    const int64_t R2 = y.rows(), C2 = y.cols();
    for (int64_t r = 0; r < R2; ++r) {
      const S n = norms[static_cast<size_t>(r)];
      if (n <= S(0)) {
        for (int64_t c = 0; c < C2; ++c) ga.at(r, c) = S(0);
        continue;
      }
      S dot = S(0);
      for (int64_t c = 0; c < C2; ++c) dot += g.at(r, c) * y.at(r, c);
      for (int64_t c = 0; c < C2; ++c) ga.at(r, c) = (g.at(r, c) - dot * y.at(r, c)) / n;
    }
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> gather_rows(Var<S> a, std::vector<int> idx) {
  const Tensor<S>& va = a.value();
  const int64_t C = va.cols();
  for (int i : idx)
    if (i < 0 || i >= va.rows())
      throw InvalidArgument("gather_rows: index " + std::to_string(i) + " out of range for " + shape_str(va.shape));
  Tensor<S> out = Tensor<S>::zeros({static_cast<int64_t>(idx.size()), C});
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy_n(va.data.begin() + idx[r] * C, C, out.data.begin() + static_cast<int64_t>(r) * C);
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai, idx = std::move(idx)](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    Tensor<S> ga = Tensor<S>::zeros(va2.shape);
    const int64_t C2 = va2.cols();
    for (size_t r = 0; r < idx.size(); ++r)
      for (int64_t c = 0; c < C2; ++c) ga.data[idx[r] * C2 + c] += g.data[static_cast<int64_t>(r) * C2 + c];
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// out[idx[r]] += a[r]; rows sharing a target accumulate.
template <typename S>
Var<S> scatter_sum_rows(Var<S> a, std::vector<int> idx, int64_t out_rows) {
  const Tensor<S>& va = a.value();
  if (static_cast<int64_t>(idx.size()) != va.rows())
    throw ShapeError("scatter_sum_rows: " + std::to_string(idx.size()) + " indices for " + shape_str(va.shape));
  for (int i : idx)
    if (i < 0 || i >= out_rows)
      throw InvalidArgument("scatter_sum_rows: target " + std::to_string(i) + " out of range 0.." + std::to_string(out_rows - 1));
  const int64_t C = va.cols();
  Tensor<S> out = Tensor<S>::zeros({out_rows, C});
  for (size_t r = 0; r < idx.size(); ++r)
    for (int64_t c = 0; c < C; ++c) out.data[idx[r] * C + c] += va.data[static_cast<int64_t>(r) * C + c];
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai, idx = std::move(idx)](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    Tensor<S> ga = Tensor<S>::zeros(va2.shape);
    const int64_t C2 = va2.cols();
    for (size_t r = 0; r < idx.size(); ++r)
      std::copy_n(g.data.begin() + idx[r] * C2, C2, ga.data.begin() + static_cast<int64_t>(r) * C2);
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> concat_cols(Var<S> a, Var<S> b) {
  const Tensor<S>& va = a.value();
  const Tensor<S>& vb = b.value();
  if (va.rows() != vb.rows())
    throw ShapeError("concat_cols: row counts differ, " + shape_str(va.shape) + " vs " + shape_str(vb.shape));
  const int64_t R = va.rows(), Ca = va.cols(), Cb = vb.cols();
  Tensor<S> out = Tensor<S>::zeros({R, Ca + Cb});
  for (int64_t r = 0; r < R; ++r) {
    std::copy_n(va.data.begin() + r * Ca, Ca, out.data.begin() + r * (Ca + Cb));
    std::copy_n(vb.data.begin() + r * Cb, Cb, out.data.begin() + r * (Ca + Cb) + Ca);
  }
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi, Ca, Cb](Tape<S>& tp, const Tensor<S>& g) {
    const int64_t R2 = g.rows();
    Tensor<S> ga = Tensor<S>::zeros({R2, Ca});
    Tensor<S> gb = Tensor<S>::zeros({R2, Cb});
    for (int64_t r = 0; r < R2; ++r) {
      std::copy_n(g.data.begin() + r * (Ca + Cb), Ca, ga.data.begin() + r * Ca);
      std::copy_n(g.data.begin() + r * (Ca + Cb) + Ca, Cb, gb.data.begin() + r * Cb);
    }
    tp.accumulate_grad(ai, std::move(ga));
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

// Sum over columns per row: N x C -> N x 1.
template <typename S>
Var<S> row_sum(Var<S> a) {
  const Tensor<S>& va = a.value();
  const int64_t R = va.rows(), C = va.cols();
  Tensor<S> out = Tensor<S>::zeros({R, 1});
  for (int64_t r = 0; r < R; ++r) {
    S s = S(0);
    for (int64_t c = 0; c < C; ++c) s += va.at(r, c);
    out.data[static_cast<size_t>(r)] = s;
  }
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    Tensor<S> ga = Tensor<S>::zeros(va2.shape);
    const int64_t R2 = va2.rows(), C2 = va2.cols();
    for (int64_t r = 0; r < R2; ++r)
      for (int64_t c = 0; c < C2; ++c) ga.at(r, c) = g.data[static_cast<size_t>(r)];
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

// Sum over rows per column: N x C -> 1 x C.
template <typename S>
Var<S> col_sum(Var<S> a) {
  const Tensor<S>& va = a.value();
  const int64_t R = va.rows(), C = va.cols();
  Tensor<S> out = Tensor<S>::zeros({1, C});
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.data[static_cast<size_t>(c)] += va.at(r, c);
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(std::move(out), [ai](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    Tensor<S> ga = Tensor<S>::zeros(va2.shape);
    const int64_t R2 = va2.rows(), C2 = va2.cols();
    for (int64_t r = 0; r < R2; ++r)
      for (int64_t c = 0; c < C2; ++c) ga.at(r, c) = g.data[static_cast<size_t>(c)];
    tp.accumulate_grad(ai, std::move(ga));
  });
  return Var<S>{&t, id};
}

template <typename S>
Var<S> reduce_sum(Var<S> a) {
  const Tensor<S>& va = a.value();
  S s = S(0);
  for (S v : va.data) s += v;
  Tape<S>& t = *a.tape;
  const int ai = a.id;
  int id = t.push(Tensor<S>::scalar(s), [ai](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    tp.accumulate_grad(ai, Tensor<S>::full(va2.shape, g.data[0]));
  });
  return Var<S>{&t, id};
}

// x (N x C) + b (1 x C) broadcast over rows.
template <typename S>
Var<S> add_rowvec(Var<S> a, Var<S> b) {
  const Tensor<S>& va = a.value();
  const Tensor<S>& vb = b.value();
  if (vb.rows() != 1 || vb.cols() != va.cols())
    throw ShapeError("add_rowvec: " + shape_str(va.shape) + " with " + shape_str(vb.shape));
  Tensor<S> out = va;
  const int64_t R = va.rows(), C = va.cols();
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.at(r, c) += vb.data[static_cast<size_t>(c)];
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    tp.accumulate_grad(ai, g);
    Tensor<S> gb = Tensor<S>::zeros(tp.value(bi).shape);
    const int64_t R2 = g.rows(), C2 = g.cols();
    for (int64_t r = 0; r < R2; ++r)
      for (int64_t c = 0; c < C2; ++c) gb.data[static_cast<size_t>(c)] += g.at(r, c);
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

// x (N x C) * v (1 x C) per-channel scale.
template <typename S>
Var<S> mul_rowvec(Var<S> a, Var<S> b) {
  const Tensor<S>& va = a.value();
  const Tensor<S>& vb = b.value();
  if (vb.rows() != 1 || vb.cols() != va.cols())
    throw ShapeError("mul_rowvec: " + shape_str(va.shape) + " with " + shape_str(vb.shape));
  Tensor<S> out = va;
  const int64_t R = va.rows(), C = va.cols();
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.at(r, c) *= vb.data[static_cast<size_t>(c)];
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    const Tensor<S>& vb2 = tp.value(bi);
    Tensor<S> ga = g;
    Tensor<S> gb = Tensor<S>::zeros(vb2.shape);
    const int64_t R2 = g.rows(), C2 = g.cols();
    for (int64_t r = 0; r < R2; ++r)
      for (int64_t c = 0; c < C2; ++c) {
        ga.at(r, c) = g.at(r, c) * vb2.data[static_cast<size_t>(c)];
        gb.data[static_cast<size_t>(c)] += g.at(r, c) * va2.at(r, c);
      }
    tp.accumulate_grad(ai, std::move(ga));
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

// x (N x C) * u (N x 1) per-row scale.
template <typename S>
Var<S> mul_colvec(Var<S> a, Var<S> b) {
  const Tensor<S>& va = a.value();
  const Tensor<S>& vb = b.value();
  if (vb.cols() != 1 || vb.rows() != va.rows())
    throw ShapeError("mul_colvec: " + shape_str(va.shape) + " with " + shape_str(vb.shape));
  Tensor<S> out = va;
  const int64_t R = va.rows(), C = va.cols();
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.at(r, c) *= vb.data[static_cast<size_t>(r)];
  Tape<S>& t = *a.tape;
  const int ai = a.id, bi = b.id;
  int id = t.push(std::move(out), [ai, bi](Tape<S>& tp, const Tensor<S>& g) {
    const Tensor<S>& va2 = tp.value(ai);
    const Tensor<S>& vb2 = tp.value(bi);
    Tensor<S> ga = g;
    Tensor<S> gb = Tensor<S>::zeros(vb2.shape);
    const int64_t R2 = g.rows(), C2 = g.cols();
    for (int64_t r = 0; r < R2; ++r) {
      S dot = S(0);
      for (int64_t c = 0; c < C2; ++c) {
        ga.at(r, c) = g.at(r, c) * vb2.data[static_cast<size_t>(r)];
        dot += g.at(r, c) * va2.at(r, c);
      }
      gb.data[static_cast<size_t>(r)] = dot;
    }
    tp.accumulate_grad(ai, std::move(ga));
    tp.accumulate_grad(bi, std::move(gb));
  });
  return Var<S>{&t, id};
}

}  // namespace dbenet::ad
