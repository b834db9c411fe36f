#include <cmath>
#include <random>

#include "doctest.h"

#include "clickbait/errors.hpp"
#include "clickbait/tensor.hpp"
#include "support.hpp"

using namespace clickbait;
using testing::numeric_gradient;
using testing::to_vector;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v, bool grad = false) {
  return Tensor::from_data({r, c}, std::move(v), grad);
}

// Plain triple loop, no tensor machinery.
std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                                 std::size_t k, std::size_t n) {
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < k; ++t) out[i * n + j] += a[i * k + t] * b[t * n + j];
  return out;
}

}  // namespace

TEST_CASE("matmul small examples") {
  Tensor c = matmul(mat(2, 2, {1, 2, 3, 4}), mat(2, 1, {5, 6}));
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.at(0, 0) == 17.0);
  CHECK(c.at(1, 0) == 39.0);

  Tensor a = mat(2, 3, {1, -2, 3, 0.5, 7, -1});
  Tensor id = mat(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(to_vector(matmul(a, id).data()) == to_vector(a.data()));

  CHECK_THROWS_AS(matmul(mat(2, 3, std::vector<double>(6)), mat(2, 3, std::vector<double>(6))), DimensionError);
}

TEST_CASE("matmul agrees with a naive loop on random shapes") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 20; ++n) {
    const std::size_t m = 1 + rng() % 6, k = 1 + rng() % 6, c = 1 + rng() % 6;
    auto av = testing::random_values(rng, m * k), bv = testing::random_values(rng, k * c);
    Tensor out = matmul(mat(m, k, av), mat(k, c, bv));
    const auto expected = naive_matmul(av, bv, m, k, c);
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out.data()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("matvec matches matmul against a column") {
  Tensor w = mat(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor y = matvec(w, Tensor::vector({1, 0, -1}));
  CHECK(to_vector(y.data()) == std::vector<double>{-2, -2});
}

TEST_CASE("elementwise activations") {
  Tensor x = Tensor::vector({0.0, 2.0, -3.0});
  Tensor s = sigmoid(x);
  CHECK(s.at(0) == 0.5);
  CHECK(s.at(1) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  CHECK(s.at(2) == doctest::Approx(1.0 / (1.0 + std::exp(3.0))).epsilon(1e-15));
  CHECK(to_vector(relu(x).data()) == std::vector<double>{0.0, 2.0, 0.0});
  CHECK(tanh(x).at(2) == doctest::Approx(std::tanh(-3.0)).epsilon(1e-15));
  CHECK(to_vector(abs(x).data()) == std::vector<double>{0.0, 2.0, 3.0});

  // Extreme inputs stay finite.
  Tensor far = sigmoid(Tensor::vector({-800.0, 800.0}));
  CHECK(far.at(0) == 0.0);
  CHECK(far.at(1) == 1.0);
}

TEST_CASE("activation derivatives at known points") {
  Tensor x = Tensor::scalar(0.0, true);
  backward(sigmoid(x));
  CHECK(x.grad()[0] == 0.25);

  Tensor t = Tensor::scalar(0.0, true);
  backward(tanh(t));
  CHECK(t.grad()[0] == 1.0);

  Tensor r = Tensor::vector({-2.0, 3.0}, true);
  backward(sum(relu(r)));
  CHECK(to_vector(r.grad()) == std::vector<double>{0.0, 1.0});

  Tensor kink = Tensor::vector({0.0}, true);
  backward(sum(add(relu(kink), abs(kink))));
  CHECK(kink.grad()[0] == 0.0);
}

TEST_CASE("scalar broadcasting") {
  Tensor v = Tensor::vector({1, 2, 3});
  CHECK(to_vector(add(v, Tensor::scalar(1)).data()) == std::vector<double>{2, 3, 4});
  CHECK(to_vector(mul(Tensor::scalar(2), v).data()) == std::vector<double>{2, 4, 6});
  CHECK_THROWS_AS(add(v, Tensor::vector({1, 2})), DimensionError);
}

TEST_CASE("concat then slice recovers the parts") {
  Tensor a = Tensor::vector({1, 2}), b = Tensor::vector({3, 4, 5});
  Tensor c = concat({a, b}, 0);
  CHECK(to_vector(c.data()) == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(to_vector(slice(c, 0, 2).data()) == to_vector(a.data()));
  CHECK(to_vector(slice(c, 2, 3).data()) == to_vector(b.data()));

  Tensor m = concat({mat(1, 2, {1, 2}), mat(2, 2, {3, 4, 5, 6})}, 0);
  CHECK(m.shape() == Shape{3, 2});
  Tensor wide = concat({mat(2, 1, {1, 2}), mat(2, 2, {3, 4, 5, 6})}, 1);
  CHECK(to_vector(wide.data()) == std::vector<double>{1, 3, 4, 2, 5, 6});
  CHECK(to_vector(row(wide, 1).data()) == std::vector<double>{2, 5, 6});
  CHECK_THROWS_AS(slice(c, 4, 2), DimensionError);
}

TEST_CASE("gather_rows scatters adjoints back to repeated rows") {
  Tensor table = mat(3, 2, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<std::size_t> idx = {2, 0, 2};
  Tensor g = gather_rows(table, idx);
  CHECK(to_vector(g.data()) == std::vector<double>{5, 6, 1, 2, 5, 6});
  backward(sum(g));
  CHECK(to_vector(table.grad()) == std::vector<double>{1, 1, 0, 0, 2, 2});
}

TEST_CASE("conv1d examples") {
  Tensor x = mat(5, 1, {1, 2, 3, 4, 5});
  Tensor ones = Tensor::from_data({3, 1, 1}, {1, 1, 1});
  Tensor zero_bias = Tensor::vector({0.0});
  Tensor y = conv1d(x, ones, zero_bias);
  CHECK(y.shape() == Shape{3, 1});
  CHECK(to_vector(y.data()) == std::vector<double>{6, 9, 12});

  // A centred delta kernel is a shift by one.
  Tensor delta = Tensor::from_data({3, 1, 1}, {0, 1, 0});
  CHECK(to_vector(conv1d(x, delta, zero_bias).data()) == std::vector<double>{2, 3, 4});

  CHECK(to_vector(conv1d(x, ones, Tensor::vector({0.5})).data()) == std::vector<double>{6.5, 9.5, 12.5});
  CHECK_THROWS_AS(conv1d(mat(2, 1, {1, 2}), ones, zero_bias), SequenceTooShortError);
}

TEST_CASE("conv1d with several channels matches a direct sum") {
  std::mt19937_64 rng(5);
  const std::size_t steps = 6, cin = 3, cout = 2, w = 3;
  auto xv = testing::random_values(rng, steps * cin), kv = testing::random_values(rng, w * cin * cout);
  auto bv = testing::random_values(rng, cout);
  Tensor y = conv1d(mat(steps, cin, xv), Tensor::from_data({w, cin, cout}, kv), Tensor::vector(bv));
  for (std::size_t t = 0; t + w <= steps; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      double acc = bv[o];
      for (std::size_t d = 0; d < w; ++d)
        for (std::size_t c = 0; c < cin; ++c) acc += xv[(t + d) * cin + c] * kv[(d * cin + c) * cout + o];
      CHECK(y.at(t, o) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("maxpool over time") {
  Tensor x = mat(3, 2, {1, 9, 4, 2, 3, 3}, true);
  Tensor y = maxpool_over_time(x);
  CHECK(to_vector(y.data()) == std::vector<double>{4, 9});
  backward(sum(y));
  CHECK(to_vector(x.grad()) == std::vector<double>{0, 1, 1, 0, 0, 0});

  Tensor tied = mat(2, 1, {7, 7}, true);
  backward(sum(maxpool_over_time(tied)));
  CHECK(to_vector(tied.grad()) == std::vector<double>{1, 0});
}

TEST_CASE("softmax properties") {
  Tensor u = softmax(Tensor::vector({3, 3, 3, 3}));
  for (double p : u.data()) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  std::mt19937_64 rng(3);
  for (int n = 0; n < 50; ++n) {
    auto v = testing::random_values(rng, 1 + rng() % 8, -20, 20);
    Tensor p = softmax(Tensor::vector(v));
    double total = 0.0;
    for (double x : p.data()) total += x;
    CHECK(std::fabs(total - 1.0) < 1e-12);

    auto shifted = v;
    for (double& x : shifted) x += 123.0;
    Tensor q = softmax(Tensor::vector(shifted));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::fabs(p.at(i) - q.at(i)) < 1e-12);
  }
  Tensor huge = softmax(Tensor::vector({1000.0, 0.0}));
  CHECK(huge.at(0) == 1.0);
  CHECK(std::isfinite(huge.at(1)));
}

TEST_CASE("binary cross-entropy") {
  CHECK(binary_cross_entropy(Tensor::scalar(0.5), 1.0).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(binary_cross_entropy(Tensor::scalar(0.5), 0.0).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(binary_cross_entropy(Tensor::scalar(0.0), 1.0).item() == doctest::Approx(-std::log(1e-7)).epsilon(1e-12));
  CHECK(std::isfinite(binary_cross_entropy(Tensor::scalar(1.0), 0.0).item()));

  Tensor p = Tensor::scalar(0.3, true);
  backward(binary_cross_entropy(p, 1.0));
  CHECK(p.grad()[0] == doctest::Approx(-1.0 / 0.3).epsilon(1e-12));

  Tensor clamped = Tensor::scalar(0.0, true);
  backward(binary_cross_entropy(clamped, 1.0));
  CHECK(clamped.grad()[0] == 0.0);

  CHECK_THROWS_AS(binary_cross_entropy(Tensor::scalar(0.5), 0.5), InvalidArgument);
}

TEST_CASE("backward on simple reductions") {
  Tensor x = Tensor::vector({1.5, -2.0, 4.0}, true);
  backward(sum(x));
  CHECK(to_vector(x.grad()) == std::vector<double>{1, 1, 1});

  x.zero_grad();
  backward(sum(mul(x, x)));
  CHECK(to_vector(x.grad()) == std::vector<double>{3.0, -4.0, 8.0});
}

TEST_CASE("gradients accumulate until zero_grad") {
  Tensor x = Tensor::vector({1.0, 2.0}, true);
  backward(sum(x));
  backward(sum(scale(x, 3.0)));
  CHECK(to_vector(x.grad()) == std::vector<double>{4.0, 4.0});
  x.zero_grad();
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("backward preconditions") {
  Tensor x = Tensor::vector({1.0, 2.0}, true);
  CHECK_THROWS_AS(backward(mul(x, x)), InvalidArgument);

  Tensor loss = sum(mul(x, x));
  backward(loss);
  CHECK_THROWS_AS(backward(loss), InvalidArgument);

  Tensor kept = sum(mul(x, x));
  x.zero_grad();
  backward(kept, GraphRetention::kRetain);
  backward(kept, GraphRetention::kRetain);
  CHECK(to_vector(x.grad()) == std::vector<double>{4.0, 8.0});

  CHECK_THROWS_AS(backward(sum(Tensor::vector({1.0}))), InvalidArgument);
  CHECK_THROWS_AS(scale(x, 2.0).mutable_data(), InvalidArgument);
}

TEST_CASE("tape visits each operation once on a shared subgraph") {
  Tensor x = Tensor::vector({0.3, -0.7}, true);
  Tensor a = sigmoid(x);
  Tensor b = add(a, a);
  Tensor loss = sum(mul(b, a));
  Tape tape = Tape::record(loss);
  CHECK(tape.size() == 4);

  backward(loss, GraphRetention::kRetain);
  // loss = 2 a^2, dloss/dx = 4 a a'
  for (std::size_t i = 0; i < 2; ++i) {
    const double s = a.at(i);
    CHECK(x.grad()[i] == doctest::Approx(4.0 * s * s * (1.0 - s)).epsilon(1e-14));
  }
}

TEST_CASE("no_grad guard suppresses recording") {
  Tensor x = Tensor::vector({1.0}, true);
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    CHECK_FALSE(sum(mul(x, x)).requires_grad());
  }
  CHECK(grad_enabled());
  CHECK(sum(mul(x, x)).requires_grad());
}

TEST_CASE("same inputs give bit-identical gradients") {
  auto run = [] {
    std::mt19937_64 rng(17);
    Tensor w = Tensor::from_data({4, 3}, testing::random_values(rng, 12), true);
    Tensor v = Tensor::vector(testing::random_values(rng, 3), true);
    backward(sum(tanh(matvec(w, v))));
    auto g = to_vector(w.grad());
    g.insert(g.end(), v.grad().begin(), v.grad().end());
    return g;
  };
  CHECK(run() == run());
}

TEST_CASE("composite expressions match finite differences on random instances") {
  std::mt19937_64 rng(29);
  for (int n = 0; n < 10; ++n) {
    const std::size_t m = 1 + rng() % 4, k = 1 + rng() % 4;
    Tensor w = Tensor::from_data({m, k}, testing::random_values(rng, m * k), true);
    Tensor x = Tensor::vector(testing::random_values(rng, k), true);
    Tensor r = Tensor::vector(testing::random_values(rng, m));
    auto f = [&] { return dot(softmax(tanh(matvec(w, x))), r); };
    backward(f());
    const auto gw = numeric_gradient(w, [&] { return f().item(); });
    const auto gx = numeric_gradient(x, [&] { return f().item(); });
    CHECK(testing::max_relative_error(gw, w.grad()) < 1e-6);
    CHECK(testing::max_relative_error(gx, x.grad()) < 1e-6);
  }
}

TEST_CASE("sigmoid sign fault is visible to a finite-difference oracle") {
  Tensor x = Tensor::vector({0.4, -1.1}, true);
  debug::set_fault(debug::Fault::kSigmoidGradSign);
  backward(sum(sigmoid(x)));
  debug::set_fault(debug::Fault::kNone);
  const auto numeric = numeric_gradient(x, [&] { return sum(sigmoid(x)).item(); });
  CHECK(testing::max_relative_error(numeric, x.grad()) > 1.0);
}
