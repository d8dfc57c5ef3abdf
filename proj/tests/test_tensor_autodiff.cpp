#include <cmath>

#include "cmlrain/autodiff.hpp"
#include "cmlrain/errors.hpp"
#include "cmlrain/grad_check.hpp"
#include "cmlrain/rng.hpp"
#include "cmlrain/tensor.hpp"
#include "doctest.h"

using namespace cmlrain;
using ad::NodePtr;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, scale);
  return t;
}

// Fixed random projection makes the scalar loss sensitive to every output
// coordinate (a plain sum is blind to directions that preserve totals,
// e.g. softmax rows).
NodePtr weighted_sum(const NodePtr& x, uint64_t salt = 17) {
  Rng rng(salt);
  Tensor w(x->value.shape());
  for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(0.5, 1.5);
  return ad::sum_all(ad::mul(x, ad::constant(w)));
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  t.at({1, 2}) = 5.0;
  CHECK(t[5] == 5.0);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeMismatch);
  CHECK(Tensor::scalar(3.0).size() == 1);
}

TEST_CASE("softmax of uniform logits is uniform") {
  NodePtr x = ad::constant(Tensor({3}, {0.0, 0.0, 0.0}));
  NodePtr y = ad::softmax(x, 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(y->value[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
}

TEST_CASE("matmul against identity") {
  Tensor a({2, 2}, {3.0, -1.0, 2.0, 0.5});
  Tensor eye({2, 2}, {1.0, 0.0, 0.0, 1.0});
  NodePtr c = ad::matmul(ad::constant(eye), ad::constant(a));
  for (int i = 0; i < 4; ++i) CHECK(c->value[i] == a[i]);
}

TEST_CASE("backward of sum gives ones") {
  NodePtr x = ad::param(Tensor({3}, {2.0, -1.0, 4.0}));
  ad::backward(ad::sum_all(x));
  for (int i = 0; i < 3; ++i) CHECK(x->grad[i] == 1.0);
}

TEST_CASE("backward of mean of squares") {
  // loss = (x1^2 + x2^2)/2, so d/dx_i = x_i; at x = [1,2] grads are [1,2].
  NodePtr x = ad::param(Tensor({2}, {1.0, 2.0}));
  ad::backward(ad::mean_all(ad::mul(x, x)));
  CHECK(x->grad[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x->grad[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("disconnected leaf keeps zero grad") {
  NodePtr x = ad::param(Tensor({2}, {1.0, 1.0}));
  NodePtr other = ad::param(Tensor({2}, {5.0, 5.0}));
  ad::backward(ad::sum_all(x));
  CHECK(other->grad_or_zeros()[0] == 0.0);
  CHECK(other->grad_or_zeros()[1] == 0.0);
}

TEST_CASE("repeated backward accumulates leaf grads") {
  NodePtr x = ad::param(Tensor({2}, {1.0, 2.0}));
  NodePtr loss = ad::sum_all(x);
  ad::backward(loss);
  ad::backward(loss);
  CHECK(x->grad[0] == doctest::Approx(2.0));
  x->zero_grad();
  ad::backward(loss);
  CHECK(x->grad[0] == doctest::Approx(1.0));
}

TEST_CASE("backward requires a scalar loss") {
  NodePtr x = ad::param(Tensor({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(ad::backward(ad::mul(x, x)), NonScalarLoss);
}

TEST_CASE("grad_check sanity: f(x) = x*x at x = 3") {
  NodePtr x = ad::param(Tensor::scalar(3.0));
  auto report = ad::grad_check({{"x", x}},
                               [&] { return ad::mul(x, x); }, 1e-5, 1e-7);
  CHECK(x->grad[0] == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("grad_check on a linear function is exact to machine noise") {
  NodePtr x = ad::param(Tensor({4}, {1.0, -2.0, 0.5, 3.0}));
  auto report = ad::grad_check({{"x", x}}, [&] { return weighted_sum(x); },
                               1e-5, 1e-9);
  CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("sigmoid derivative at origin is 1/4") {
  NodePtr x = ad::param(Tensor::scalar(0.0));
  auto report = ad::grad_check({{"x", x}},
                               [&] { return ad::sigmoid(x); }, 1e-5, 1e-7);
  CHECK(x->grad[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(report.max_rel_err < 1e-7);
}

TEST_CASE("every primitive passes finite-difference checks at 5 points") {
  // Elementwise primitives at 1e-6; matmul/softmax/layer_norm chains at 1e-5.
  for (uint64_t point = 0; point < 5; ++point) {
    Rng rng(100 + point);

    NodePtr a = ad::param(random_tensor({2, 3, 4}, rng));
    NodePtr b = ad::param(random_tensor({2, 3, 4}, rng));
    NodePtr bias = ad::param(random_tensor({4}, rng));
    NodePtr row = ad::param(random_tensor({1, 3, 4}, rng));

    auto check = [&](const char* what,
                     std::vector<std::pair<std::string, NodePtr>> params,
                     std::function<NodePtr()> f, double tol) {
      auto report = ad::grad_check(params, f, 1e-5, tol);
      INFO(what << " worst=" << report.worst << " rel=" << report.max_rel_err);
      CHECK(report.max_rel_err < tol);
    };

    check("add", {{"a", a}, {"b", b}},
          [&] { return weighted_sum(ad::add(a, b)); }, 1e-6);
    check("add broadcast bias", {{"a", a}, {"bias", bias}},
          [&] { return weighted_sum(ad::add(a, bias)); }, 1e-6);
    check("add broadcast row", {{"a", a}, {"row", row}},
          [&] { return weighted_sum(ad::add(a, row)); }, 1e-6);
    check("sub", {{"a", a}, {"b", b}},
          [&] { return weighted_sum(ad::sub(a, b)); }, 1e-6);
    check("mul", {{"a", a}, {"b", b}},
          [&] { return weighted_sum(ad::mul(a, b)); }, 1e-6);
    check("mul broadcast", {{"a", a}, {"bias", bias}},
          [&] { return weighted_sum(ad::mul(a, bias)); }, 1e-6);
    check("scale/add_scalar", {{"a", a}},
          [&] { return weighted_sum(ad::add_scalar(ad::scale(a, -1.7), 0.3)); },
          1e-6);
    check("sigmoid", {{"a", a}},
          [&] { return weighted_sum(ad::sigmoid(a)); }, 1e-6);
    check("tanh", {{"a", a}},
          [&] { return weighted_sum(ad::tanh(a)); }, 1e-6);
    check("softplus", {{"a", a}},
          [&] { return weighted_sum(ad::softplus(a)); }, 1e-6);
    check("relu", {{"a", a}},
          [&] { return weighted_sum(ad::relu(a)); }, 1e-5);

    NodePtr m1 = ad::param(random_tensor({3, 4}, rng));
    NodePtr m2 = ad::param(random_tensor({4, 5}, rng));
    check("matmul 2d", {{"m1", m1}, {"m2", m2}},
          [&] { return weighted_sum(ad::matmul(m1, m2)); }, 1e-5);

    NodePtr t3 = ad::param(random_tensor({2, 3, 4}, rng));
    check("matmul 3d x 2d", {{"t3", t3}, {"m2", m2}},
          [&] { return weighted_sum(ad::matmul(t3, m2)); }, 1e-5);

    NodePtr l3 = ad::param(random_tensor({2, 4, 3}, rng));
    check("matmul batched", {{"t3", t3}, {"l3", l3}},
          [&] { return weighted_sum(ad::matmul(t3, l3)); }, 1e-5);

    check("transpose", {{"t3", t3}},
          [&] { return weighted_sum(ad::transpose(t3, 1, 2)); }, 1e-6);
    check("reshape", {{"t3", t3}},
          [&] { return weighted_sum(ad::reshape(t3, {6, 4})); }, 1e-6);
    check("concat", {{"a", a}, {"b", b}},
          [&] { return weighted_sum(ad::concat({a, b}, 1)); }, 1e-6);
    check("slice", {{"a", a}},
          [&] { return weighted_sum(ad::slice(a, 1, 1, 2)); }, 1e-6);
    check("sum axis", {{"a", a}},
          [&] { return weighted_sum(ad::sum(a, 1)); }, 1e-6);
    check("mean axis", {{"a", a}},
          [&] { return weighted_sum(ad::mean(a, 2)); }, 1e-6);
    check("softmax", {{"a", a}},
          [&] { return weighted_sum(ad::softmax(a, 2)); }, 1e-5);
    check("softmax middle axis", {{"a", a}},
          [&] { return weighted_sum(ad::softmax(a, 1)); }, 1e-5);
    check("layer_norm", {{"a", a}},
          [&] { return weighted_sum(ad::layer_norm(a, 1e-5)); }, 1e-5);
    check("chain", {{"m1", m1}, {"m2", m2}},
          [&] {
            return weighted_sum(
                ad::layer_norm(ad::softmax(ad::matmul(m1, m2), 1), 1e-5));
          },
          1e-5);
  }
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    NodePtr x = ad::constant(random_tensor({4, 7}, rng, 3.0));
    NodePtr y = ad::softmax(x, 1);
    for (int r = 0; r < 4; ++r) {
      double s = 0.0;
      for (int c = 0; c < 7; ++c) s += y->value[r * 7 + c];
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
    double c_shift = rng.uniform(-50.0, 50.0);
    NodePtr y2 = ad::softmax(ad::add_scalar(x, c_shift), 1);
    for (int i = 0; i < 28; ++i) {
      CHECK(std::abs(y->value[i] - y2->value[i]) < 1e-12);
    }
  }
}

TEST_CASE("layer_norm normalizes rows") {
  Rng rng(6);
  NodePtr x = ad::constant(random_tensor({5, 16}, rng, 4.0));
  NodePtr y = ad::layer_norm(x, 1e-12);
  for (int r = 0; r < 5; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < 16; ++c) mean += y->value[r * 16 + c];
    mean /= 16.0;
    for (int c = 0; c < 16; ++c) {
      double d = y->value[r * 16 + c] - mean;
      var += d * d;
    }
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("dropout identity cases and mask backward") {
  Rng rng(9);
  NodePtr x = ad::param(random_tensor({3, 8}, rng));

  NodePtr eval_mode = ad::dropout(x, 0.5, false, rng);
  CHECK(eval_mode.get() == x.get());
  NodePtr p_zero = ad::dropout(x, 0.0, true, rng);
  CHECK(p_zero.get() == x.get());

  Rng mask_rng(11);
  NodePtr y = ad::dropout(x, 0.4, true, mask_rng);
  int dropped = 0;
  for (int64_t i = 0; i < y->value.size(); ++i) {
    if (y->value[i] == 0.0) {
      ++dropped;
    } else {
      // Inverted dropout scales survivors by 1/(1-p).
      CHECK(y->value[i] == doctest::Approx(x->value[i] / 0.6).epsilon(1e-12));
    }
  }
  CHECK(dropped > 0);
  x->zero_grad();
  ad::backward(ad::sum_all(y));
  for (int64_t i = 0; i < x->value.size(); ++i) {
    double expected = y->value[i] == 0.0 ? 0.0 : 1.0 / 0.6;
    CHECK(x->grad[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("shape errors are typed") {
  NodePtr a = ad::constant(Tensor({2, 3}));
  NodePtr b = ad::constant(Tensor({4, 5}));
  CHECK_THROWS_AS(ad::matmul(a, b), ShapeMismatch);
  CHECK_THROWS_AS(ad::softmax(a, 7), InvalidAxis);
  CHECK_THROWS_AS(ad::slice(a, 1, 2, 5), ShapeMismatch);
  CHECK_THROWS_AS(ad::reshape(a, {7}), ShapeMismatch);
  CHECK_THROWS_AS(ad::add(a, b), ShapeMismatch);
}

TEST_CASE("debug checks trap non-finite values") {
  ad::set_debug_checks(true);
  NodePtr x = ad::constant(Tensor({1}, {1e308}));
  CHECK_THROWS_AS(ad::mul(x, x), NumericError);  // overflows to inf
  ad::set_debug_checks(false);
}
