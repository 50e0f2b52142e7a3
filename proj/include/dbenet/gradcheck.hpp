#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dbenet/autodiff.hpp"

namespace dbenet {

// Central finite differences in 64-bit against reverse-mode gradients.
// `build` must be a pure function of the given leaf tensors: it receives a
// fresh tape plus leaves in input order and returns a scalar loss.
//
// Relative error per entry is |ad - fd| / max(|ad|, |fd|, floor); the floor
// keeps FD roundoff noise on true-zero gradients from registering as error.
struct FdReport {
  double max_rel_err = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using BuildLossFn = std::function<ad::Var<double>(ad::Tape<double>&, const std::vector<ad::Var<double>>&)>;

inline FdReport fd_check(const std::vector<Tensor<double>>& inputs, const BuildLossFn& build, double h = 1e-5,
                         double floor = 1e-3) {
  auto run = [&](const std::vector<Tensor<double>>& ins) {
    ad::Tape<double> tape;
    std::vector<ad::Var<double>> vars;
    vars.reserve(ins.size());
    for (const auto& t : ins) vars.push_back(ad::leaf(tape, t));
    ad::Var<double> loss = build(tape, vars);
    if (!loss.value().is_scalar()) throw InvalidArgument("fd_check: loss must be scalar");
    return std::make_pair(loss.value().data[0], loss.id);
  };

  // Analytic pass.
  ad::Tape<double> tape;
  std::vector<ad::Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(ad::leaf(tape, t));
  ad::Var<double> loss = build(tape, vars);
  tape.backward(loss.id);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(vars.size());
  for (const auto& v : vars) analytic.push_back(tape.grad(v.id));

  FdReport rep;
  std::vector<Tensor<double>> work = inputs;
  for (size_t t = 0; t < work.size(); ++t) {
    for (size_t i = 0; i < work[t].data.size(); ++i) {
      const double orig = work[t].data[i];
      work[t].data[i] = orig + h;
      const double lp = run(work).first;
      work[t].data[i] = orig - h;
      const double lm = run(work).first;
      work[t].data[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double a = analytic[t].data[i];
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_analytic = a;
        rep.worst_numeric = fd;
      }
    }
  }
  return rep;
}

}  // namespace dbenet
