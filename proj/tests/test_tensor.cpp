#include <doctest.h>

#include <cmath>

#include "dbenet/autodiff.hpp"
#include "dbenet/gradcheck.hpp"
#include "dbenet/params.hpp"
#include "dbenet/rng.hpp"

using namespace dbenet;
using ad::Tape;
using ad::Var;

namespace {

// Random tensor with entries kept away from relu/sqrt kinks.
Tensor<double> rand_tensor(Rng& rng, std::vector<int64_t> shape, double lo = -1.0, double hi = 1.0, double min_abs = 0.0) {
  Tensor<double> t = Tensor<double>::zeros(std::move(shape));
  for (double& v : t.data) {
    do {
      v = rng.uniform(lo, hi);
    } while (std::abs(v) < min_abs);
  }
  return t;
}

// Wraps op(x...) into a scalar by weighting with a tensor that is a pure
// function of `seed`, so fd_check can re-run the forward pass unchanged.
ad::Var<double> weighted_sum(Tape<double>& t, Var<double> y, uint64_t seed) {
  Rng r(seed);
  Tensor<double> w = Tensor<double>::zeros(y.value().shape);
  for (double& v : w.data) v = r.uniform(-1, 1);
  return ad::reduce_sum(ad::mul(y, ad::leaf(t, w)));
}

}  // namespace

TEST_CASE("matmul against identity and known product") {
  Tape<float> t;
  auto a = ad::leaf(t, Tensor<float>({2, 2}, {1, 2, 3, 4}));
  auto eye = ad::leaf(t, Tensor<float>({2, 2}, {1, 0, 0, 1}));
  auto out = ad::matmul(a, eye);
  CHECK(out.value().data == std::vector<float>{1, 2, 3, 4});
  auto prod = ad::matmul(a, a);
  CHECK(prod.value().data == std::vector<float>{7, 10, 15, 22});
  CHECK_THROWS_AS(ad::matmul(a, ad::leaf(t, Tensor<float>::zeros({3, 2}))), ShapeError);
}

TEST_CASE("softmax_rows basics") {
  Tape<float> t;
  auto one_col = ad::leaf(t, Tensor<float>({3, 1}, {-5, 0, 7}));
  auto sm = ad::softmax_rows(one_col);
  for (float v : sm.value().data) CHECK(v == 1.0f);

  auto logits = ad::leaf(t, Tensor<float>({2, 4}, {0, 1, 2, 3, -1, -1, -1, -1}));
  auto out = ad::softmax_rows(logits);
  for (int64_t r = 0; r < 2; ++r) {
    float sum = 0;
    for (int64_t c = 0; c < 4; ++c) sum += out.value().at(r, c);
    CHECK(std::abs(sum - 1.0f) < 1e-6f);
  }
  CHECK_THROWS_AS(ad::softmax_rows(ad::leaf(t, Tensor<float>::zeros({2, 0}))), InvalidArgument);
}

TEST_CASE("l2_normalize_rows unit norms and zero-row rule") {
  Tape<float> t;
  auto x = ad::leaf(t, Tensor<float>({3, 3}, {3, 4, 0, 0, 0, 0, 1, 1, 1}));
  auto y = ad::l2_normalize_rows(x);
  CHECK(std::abs(std::hypot(y.value().at(0, 0), y.value().at(0, 1)) - 1.0f) < 1e-6f);
  for (int64_t c = 0; c < 3; ++c) CHECK(y.value().at(1, c) == 0.0f);  // zero row stays zero
  float n2 = 0;
  for (int64_t c = 0; c < 3; ++c) n2 += y.value().at(2, c) * y.value().at(2, c);
  CHECK(std::abs(std::sqrt(n2) - 1.0f) < 1e-6f);
}

TEST_CASE("scatter_sum_rows accumulates shared targets") {
  Tape<float> t;
  auto rows = ad::leaf(t, Tensor<float>({2, 3}, {1, 2, 3, 10, 20, 30}));
  auto out = ad::scatter_sum_rows(rows, {0, 0}, 2);
  CHECK(out.value().data == std::vector<float>{11, 22, 33, 0, 0, 0});
}

TEST_CASE("gather then scatter round trip") {
  Tape<float> t;
  auto x = ad::leaf(t, Tensor<float>({3, 2}, {1, 2, 3, 4, 5, 6}));
  auto picked = ad::gather_rows(x, {2, 0});
  CHECK(picked.value().data == std::vector<float>{5, 6, 1, 2});
  CHECK_THROWS_AS(ad::gather_rows(x, {3}), InvalidArgument);
}

TEST_CASE("backward computes 2x for sum of squares") {
  Tape<double> t;
  Tensor<double> xv({2, 2}, {0.5, -1.5, 2.0, 3.0});
  auto x = ad::leaf(t, xv);
  auto loss = ad::reduce_sum(ad::mul(x, x));
  t.backward(loss.id);
  Tensor<double> g = t.grad(x.id);
  for (size_t i = 0; i < xv.data.size(); ++i) CHECK(g.data[i] == doctest::Approx(2 * xv.data[i]).epsilon(1e-15));
}

TEST_CASE("backward requires scalar loss") {
  Tape<double> t;
  auto x = ad::leaf(t, Tensor<double>({2, 2}, {1, 2, 3, 4}));
  CHECK_THROWS_AS(t.backward(x.id), InvalidArgument);
}

TEST_CASE("backward is deterministic") {
  auto run = [] {
    Tape<float> t;
    auto x = ad::leaf(t, Tensor<float>({2, 3}, {0.1f, -0.2f, 0.3f, 0.4f, -0.5f, 0.6f}));
    auto y = ad::l2_normalize_rows(ad::relu(ad::matmul(x, ad::transpose(x))));
    auto loss = ad::reduce_sum(y);
    t.backward(loss.id);
    return t.grad(x.id).data;
  };
  CHECK(run() == run());
}

TEST_CASE("finite differences validate every op") {
  Rng rng(77);
  uint64_t case_seed = 0;
  auto check = [&](const char* name, const std::vector<Tensor<double>>& inputs, const BuildLossFn& build) {
    FdReport rep = fd_check(inputs, build);
    INFO(name, " max rel err ", rep.max_rel_err);
    CHECK(rep.max_rel_err < 1e-4);
    ++case_seed;
  };
  // `ws` is bound by reference in each lambda; it stays constant within one
  // check, keeping the build function pure across fd_check re-runs.
  auto ws = [&case_seed](Tape<double>& t, Var<double> y) { return weighted_sum(t, y, case_seed * 1000 + 17); };

  check("matmul", {rand_tensor(rng, {3, 4}), rand_tensor(rng, {4, 2})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::matmul(v[0], v[1])); });
  check("add/sub/mul", {rand_tensor(rng, {3, 3}), rand_tensor(rng, {3, 3})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) {
          return ws(t, ad::mul(ad::add(v[0], v[1]), ad::sub(v[0], v[1])));
        });
  check("relu", {rand_tensor(rng, {4, 4}, -1, 1, 0.05)},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::relu(v[0])); });
  check("softmax_rows", {rand_tensor(rng, {3, 5})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::softmax_rows(v[0])); });
  check("l2_normalize_rows", {rand_tensor(rng, {4, 3}, 0.2, 1.0)},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::l2_normalize_rows(v[0])); });
  check("gather_rows", {rand_tensor(rng, {5, 3})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::gather_rows(v[0], {4, 0, 0, 2})); });
  check("scatter_sum_rows", {rand_tensor(rng, {4, 3})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) {
          return ws(t, ad::scatter_sum_rows(v[0], {1, 1, 0, 2}, 3));
        });
  check("concat_cols", {rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 4})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::concat_cols(v[0], v[1])); });
  check("row_sum/col_sum", {rand_tensor(rng, {4, 5})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) {
          return ad::add(ws(t, ad::row_sum(v[0])), ws(t, ad::col_sum(v[0])));
        });
  check("sqrt", {rand_tensor(rng, {3, 3}, 0.1, 2.0)},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::sqrt_elem(v[0])); });
  check("log", {rand_tensor(rng, {3, 3}, 0.1, 2.0)},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::log_elem(v[0])); });
  check("recip", {rand_tensor(rng, {3, 3}, 0.2, 1.5)},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::recip_elem(v[0])); });
  check("transpose+reshape", {rand_tensor(rng, {3, 4})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) {
          return ws(t, ad::reshape(ad::transpose(v[0]), {3, 4}));
        });
  check("scale/add_scalar", {rand_tensor(rng, {2, 3})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) {
          return ws(t, ad::add_scalar(ad::scale(v[0], 2.5), -0.75));
        });
  check("add_rowvec/mul_rowvec", {rand_tensor(rng, {4, 3}), rand_tensor(rng, {1, 3}), rand_tensor(rng, {1, 3})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) {
          return ws(t, ad::add_rowvec(ad::mul_rowvec(v[0], v[1]), v[2]));
        });
  check("mul_colvec", {rand_tensor(rng, {4, 3}), rand_tensor(rng, {4, 1})},
        [&](Tape<double>& t, const std::vector<Var<double>>& v) { return ws(t, ad::mul_colvec(v[0], v[1])); });
}

TEST_CASE("fault injection breaks the relu gradient check") {
  Rng rng(78);
  Tensor<double> x = rand_tensor(rng, {4, 4}, 0.1, 1.0);  // all positive: relu active
  ad::set_backward_fault_injection(true);
  FdReport rep = fd_check({x}, [&](Tape<double>& t, const std::vector<Var<double>>& v) {
    return weighted_sum(t, ad::relu(v[0]), 4242);
  });
  ad::set_backward_fault_injection(false);
  CHECK(rep.max_rel_err > 1e-4);
}

TEST_CASE("non-trainable parameters receive no gradient") {
  ParamStore<double> store;
  store.add("w", Tensor<double>({1, 2}, {1.0, 2.0}));
  store.add("frozen", Tensor<double>({1, 2}, {3.0, 4.0}));
  store.get("frozen").trainable = false;

  Tape<double> t;
  TapeBinding<double> bind(t, store);
  auto loss = ad::reduce_sum(ad::mul(bind("w"), bind("frozen")));
  auto grads = backward(t, bind, loss, store);
  CHECK(grads.count("w") == 1);
  CHECK(grads.count("frozen") == 0);
  CHECK(grads.at("w").data == std::vector<double>{3.0, 4.0});
}

TEST_CASE("adam first step and freezing") {
  SUBCASE("zero gradient leaves parameter unchanged") {
    ParamStore<float> store;
    store.add("w", Tensor<float>({1, 3}, {1, 2, 3}));
    AdamState<float> st;
    st.lr = 0.1f;
    std::map<std::string, Tensor<float>> grads{{"w", Tensor<float>::zeros({1, 3})}};
    adam_step(store, grads, st);
    CHECK(store.get("w").value.data == std::vector<float>{1, 2, 3});
  }

  SUBCASE("first step matches the bias-corrected formula") {
    // With constant g, mhat = g and vhat = g^2 at t=1, so the update is
    // -lr * g / (|g| + eps) = -lr * sign(g) up to eps.
    ParamStore<double> store;
    store.add("w", Tensor<double>({1, 2}, {0.0, 0.0}));
    AdamState<double> st;
    st.lr = 1e-3;
    std::map<std::string, Tensor<double>> grads{{"w", Tensor<double>({1, 2}, {0.5, -0.25})}};
    adam_step(store, grads, st);
    const double eps = 1e-8;
    CHECK(store.get("w").value.data[0] == doctest::Approx(-1e-3 * 0.5 / (0.5 + eps)).epsilon(1e-12));
    CHECK(store.get("w").value.data[1] == doctest::Approx(1e-3 * 0.25 / (0.25 + eps)).epsilon(1e-12));
  }

  SUBCASE("frozen parameter never changes bit-exactly") {
    ParamStore<float> store;
    store.add("w", Tensor<float>({1, 2}, {1.5f, -2.5f}));
    store.get("w").trainable = false;
    AdamState<float> st;
    std::map<std::string, Tensor<float>> grads;  // frozen params need no entry
    for (int i = 0; i < 5; ++i) adam_step(store, grads, st);
    CHECK(store.get("w").value.data == std::vector<float>{1.5f, -2.5f});
  }

  SUBCASE("missing gradient for trainable parameter is an internal error") {
    ParamStore<float> store;
    store.add("w", Tensor<float>({1, 1}, {1.0f}));
    AdamState<float> st;
    std::map<std::string, Tensor<float>> grads;
    CHECK_THROWS_AS(adam_step(store, grads, st), InternalError);
  }
}

TEST_CASE("freeze mask prefix matching and validation") {
  ParamStore<float> store;
  store.add("sfcn.encoder.stem.weight", Tensor<float>::zeros({1, 1}));
  store.add("sfcn.decoder.final.weight", Tensor<float>::zeros({1, 1}));
  FreezeMask mask({"sfcn.encoder"});
  mask.validate(store);
  CHECK(mask.matches("sfcn.encoder.stem.weight"));
  CHECK(!mask.matches("sfcn.decoder.final.weight"));
  FreezeMask bad({"kpfcn"});
  CHECK_THROWS_AS(bad.validate(store), InvalidArgument);
}

TEST_CASE("finite checks flag catches NaN") {
  ad::set_finite_checks(true);
  Tape<float> t;
  auto x = ad::leaf(t, Tensor<float>({1, 1}, {-1.0f}));
  CHECK_THROWS_AS(ad::log_elem(x), InternalError);
  ad::set_finite_checks(false);
}
