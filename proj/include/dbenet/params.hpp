#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dbenet/autodiff.hpp"
#include "dbenet/rng.hpp"
#include "dbenet/tensor.hpp"

namespace dbenet {

enum class ParamKind {
  Weight,  // gradient-trained
  Buffer,  // state carried in checkpoints but never gradient-trained
           // (normalization running stats, kernel point dispositions)
};

template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  ParamKind kind = ParamKind::Weight;
  bool trainable = true;  // buffers are always non-trainable
};

// Ordered, name-indexed parameter table. Iteration order is insertion order
// so training and serialization stay deterministic.
template <typename S>
class ParamStore {
 public:
  int add(std::string name, Tensor<S> value, ParamKind kind = ParamKind::Weight) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
    const int id = static_cast<int>(items_.size());
    index_[name] = id;
    items_.push_back(Parameter<S>{std::move(name), std::move(value), kind, kind == ParamKind::Weight});
    return id;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Parameter<S>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown parameter: " + name);
    return items_[static_cast<size_t>(it->second)];
  }
  const Parameter<S>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown parameter: " + name);
    return items_[static_cast<size_t>(it->second)];
  }

  std::vector<Parameter<S>>& items() { return items_; }
  const std::vector<Parameter<S>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& p : items_) {
      out.add(p.name, p.value.template cast<T>(), p.kind);
      out.get(p.name).trainable = p.trainable;
    }
    return out;
  }

 private:
  std::vector<Parameter<S>> items_;
  std::unordered_map<std::string, int> index_;
};

// Set of parameter-name prefixes that are frozen during fine-tuning.
class FreezeMask {
 public:
  FreezeMask() = default;
  explicit FreezeMask(std::vector<std::string> prefixes) : prefixes_(std::move(prefixes)) {}

  bool matches(const std::string& name) const {
    for (const auto& p : prefixes_)
      if (name.rfind(p, 0) == 0) return true;
    return false;
  }

  const std::vector<std::string>& prefixes() const { return prefixes_; }
  bool empty() const { return prefixes_.empty(); }

  // Every prefix must match at least one parameter.
  template <typename S>
  void validate(const ParamStore<S>& store) const {
    for (const auto& p : prefixes_) {
      bool hit = false;
      for (const auto& item : store.items())
        if (item.name.rfind(p, 0) == 0) {
          hit = true;
          break;
        }
      if (!hit) throw InvalidArgument("freeze prefix matches no parameter: " + p);
    }
  }

 private:
  std::vector<std::string> prefixes_;
};

// Binds store parameters onto a tape lazily. Trainable parameters become
// gradient-tracked leaves; buffers and frozen weights enter as constants.
template <typename S>
class TapeBinding {
 public:
  TapeBinding(ad::Tape<S>& tape, const ParamStore<S>& store) : tape_(&tape), store_(&store) {}

  ad::Var<S> operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return ad::Var<S>{tape_, it->second};
    const Parameter<S>& p = store_->get(name);
    ad::Var<S> v = ad::leaf(*tape_, p.value);
    bound_[name] = v.id;
    if (p.trainable) tracked_.push_back(name);
    return v;
  }

  // Gradients of all trainable parameters bound during the forward pass.
  // Trainable parameters never placed on the tape are reported as zeros by
  // the caller (they did not influence the loss).
  std::map<std::string, Tensor<S>> gradients() const {
    std::map<std::string, Tensor<S>> out;
    for (const auto& name : tracked_) out[name] = tape_->grad(bound_.at(name));
    return out;
  }

 private:
  ad::Tape<S>* tape_;
  const ParamStore<S>* store_;
  std::unordered_map<std::string, int> bound_;
  std::vector<std::string> tracked_;
};

// Loss gradients keyed by parameter name. Every trainable parameter of the
// store gets an entry; parameters that did not reach the tape get zeros.
template <typename S>
std::map<std::string, Tensor<S>> backward(ad::Tape<S>& tape, TapeBinding<S>& binding, ad::Var<S> loss,
                                          const ParamStore<S>& store) {
  tape.backward(loss.id);
  auto grads = binding.gradients();
  for (const auto& p : store.items())
    if (p.trainable && !grads.count(p.name)) grads[p.name] = Tensor<S>::zeros(p.value.shape);
  return grads;
}

template <typename S>
struct AdamState {
  S lr = S(0.1);  // documented default; desk-scale runs override to 1e-3
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  int64_t step = 0;
  std::unordered_map<std::string, std::pair<Tensor<S>, Tensor<S>>> moments;
};

// Standard bias-corrected ADAM update over trainable parameters. Buffers and
// frozen parameters are left untouched bit-for-bit.
template <typename S>
void adam_step(ParamStore<S>& store, const std::map<std::string, Tensor<S>>& grads, AdamState<S>& state) {
  state.step += 1;
  const S b1t = S(1) - std::pow(state.beta1, static_cast<S>(state.step));
  const S b2t = S(1) - std::pow(state.beta2, static_cast<S>(state.step));
  for (auto& p : store.items()) {
    if (!p.trainable) continue;
    auto git = grads.find(p.name);
    if (git == grads.end()) throw InternalError("adam_step: missing gradient for trainable parameter " + p.name);
    const Tensor<S>& g = git->second;
    if (!g.same_shape(p.value))
      throw ShapeError("adam_step: gradient shape " + shape_str(g.shape) + " vs parameter " + shape_str(p.value.shape) +
                       " for " + p.name);
    auto mit = state.moments.find(p.name);
    if (mit == state.moments.end())
      mit = state.moments.emplace(p.name, std::make_pair(Tensor<S>::zeros(p.value.shape), Tensor<S>::zeros(p.value.shape)))
                .first;
    Tensor<S>& m = mit->second.first;
    Tensor<S>& v = mit->second.second;
    for (size_t i = 0; i < p.value.data.size(); ++i) {
      m.data[i] = state.beta1 * m.data[i] + (S(1) - state.beta1) * g.data[i];
      v.data[i] = state.beta2 * v.data[i] + (S(1) - state.beta2) * g.data[i] * g.data[i];
      const S mhat = m.data[i] / b1t;
      const S vhat = v.data[i] / b2t;
      p.value.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
template <typename S>
Tensor<S> uniform_init(std::vector<int64_t> shape, int64_t fan_in, Rng& rng) {
  Tensor<S> t = Tensor<S>::zeros(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<int64_t>(fan_in, 1)));
  for (S& v : t.data) v = static_cast<S>(rng.uniform(-bound, bound));
  return t;
}

}  // namespace dbenet
