#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kw2sent/adam.hpp"
#include "kw2sent/rng.hpp"
#include "kw2sent/tensor.hpp"
#include "support/fd_check.hpp"

using namespace kw2sent;
using testsupport::fd_gradient;
using testsupport::rel_error;

using T = Tensor<double>;

namespace {

T leaf(Shape shape, std::vector<double> data) {
  return T::from(std::move(shape), std::move(data)).set_requires_grad(true);
}

T random_leaf(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  return T::uniform(std::move(shape), lo, hi, rng).set_requires_grad(true);
}

// Scalar probe of a tensor-valued op: weighted sum with fixed coefficients so
// the whole Jacobian is exercised.
double probe(const T& out, const std::vector<double>& w) {
  double acc = 0;
  for (std::size_t i = 0; i < out.numel(); ++i) acc += w[i] * out.value()[i];
  return acc;
}

std::vector<double> probe_weights(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (auto& x : w) x = rng.uniform(-1, 1);
  return w;
}

}  // namespace

TEST_CASE("tensor construction and invariants") {
  auto t = T::from({2, 3}, {1, 2, 3, 4, 5, 6});
  REQUIRE(t.numel() == 6);
  REQUIRE(t.dim(0) == 2);
  REQUIRE_THROWS_AS(T::from({2, 2}, {1, 2, 3}), ShapeError);
  REQUIRE_THROWS_AS(t.item(), ShapeError);
  REQUIRE_THROWS_AS(t.grad(), StateError);

  auto id = T::identity(3);
  REQUIRE(id.value()[0] == 1.0);
  REQUIRE(id.value()[1] == 0.0);
  REQUIRE(id.value()[4] == 1.0);
}

TEST_CASE("matmul values") {
  auto id = T::identity(2);
  auto v = T::from({2, 1}, {3, 4});
  auto out = matmul(id, v);
  REQUIRE(out.value() == std::vector<double>{3, 4});

  auto a = T::from({1, 2}, {1, 2});
  auto b = T::from({2, 1}, {3, 4});
  REQUIRE(matmul(a, b).value()[0] == 11.0);

  REQUIRE_THROWS_WITH(matmul(T::zeros({2, 3}), T::zeros({2, 3})),
                      Catch::Matchers::ContainsSubstring("[2x3]"));
}

TEST_CASE("matmul gradient of sum equals ones times b transpose") {
  Rng rng(7);
  auto a = random_leaf({3, 4}, rng);
  auto b = random_leaf({4, 2}, rng);

  {
    Tape<double> tape;
    auto loss = sum(matmul(a, b));
    tape.backward(loss);
  }
  // d/dA sum(AB) = ones(3x2) * B^T
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t p = 0; p < 4; ++p) {
      double expect = 0;
      for (std::size_t j = 0; j < 2; ++j) expect += b.value()[p * 2 + j];
      REQUIRE(a.grad()[i * 4 + p] == Catch::Approx(expect).margin(1e-12));
    }

  auto eval = [&] {
    double acc = 0;
    auto out = matmul(a, b);
    for (double v : out.value()) acc += v;
    return acc;
  };
  auto ga = a.grad();
  auto fd = fd_gradient(a, eval);
  REQUIRE(rel_error(ga, fd) < 1e-6);
  auto gb = b.grad();
  auto fdb = fd_gradient(b, eval);
  REQUIRE(rel_error(gb, fdb) < 1e-6);
}

TEST_CASE("elementwise values") {
  REQUIRE(sigmoid(T::scalar(0)).item() == 0.5);
  REQUIRE(kw2sent::tanh(T::scalar(0)).item() == 0.0);
  REQUIRE(sigmoid(T::scalar(1)).item() ==
          Catch::Approx(0.7310585786300049).epsilon(1e-12));

  auto a = T::from({3}, {1, 2, 3});
  auto b = T::from({3}, {4, 5, 6});
  REQUIRE(add(a, b).value() == std::vector<double>{5, 7, 9});
  REQUIRE(mul(a, b).value() == std::vector<double>{4, 10, 18});
  REQUIRE(sub(a, b).value() == std::vector<double>{-3, -3, -3});
  REQUIRE(scale(a, 2.0).value() == std::vector<double>{2, 4, 6});
  REQUIRE(one_minus(a).value() == std::vector<double>{0, -1, -2});

  // scalar broadcast
  REQUIRE(add(a, T::scalar(10)).value() == std::vector<double>{11, 12, 13});
  REQUIRE(mul(T::scalar(2), a).value() == std::vector<double>{2, 4, 6});
  REQUIRE_THROWS_AS(add(a, T::from({2}, {1, 2})), ShapeError);

  auto c = concat({a, b});
  REQUIRE(c.value() == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("elementwise gradients vs finite differences") {
  Rng rng(11);
  auto x = random_leaf({5}, rng);
  auto y = random_leaf({5}, rng);
  auto s = random_leaf({1}, rng, 0.2, 1.5);

  auto run = [&](auto make) {
    Rng wrng(101);
    auto w = probe_weights(make().numel(), wrng);
    double relerr_x;
    {
      Tape<double> tape;
      auto out = make();
      auto wt = T::from({out.numel()}, w);
      tape.backward(sum(mul(out, wt)));
    }
    auto eval = [&] { return probe(make(), w); };
    relerr_x = rel_error(x.grad(), fd_gradient(x, eval));
    x.clear_grad();
    y.clear_grad();
    s.clear_grad();
    return relerr_x;
  };

  REQUIRE(run([&] { return add(x, y); }) < 1e-6);
  REQUIRE(run([&] { return sub(x, y); }) < 1e-6);
  REQUIRE(run([&] { return mul(x, y); }) < 1e-6);
  REQUIRE(run([&] { return kw2sent::tanh(x); }) < 1e-6);
  REQUIRE(run([&] { return sigmoid(x); }) < 1e-6);
  REQUIRE(run([&] { return one_minus(x); }) < 1e-6);
  REQUIRE(run([&] { return scale(x, 1.7); }) < 1e-6);
  REQUIRE(run([&] { return scale(x, s); }) < 1e-6);
  REQUIRE(run([&] { return concat({x, y}); }) < 1e-6);
}

TEST_CASE("matvec and row gradients") {
  Rng rng(13);
  auto wm = random_leaf({4, 3}, rng);
  auto x = random_leaf({3}, rng);
  auto w = probe_weights(4, rng);
  {
    Tape<double> tape;
    auto wt = T::from({4}, w);
    tape.backward(sum(mul(matvec(wm, x), wt)));
  }
  auto eval = [&] { return probe(matvec(wm, x), w); };
  REQUIRE(rel_error(wm.grad(), fd_gradient(wm, eval)) < 1e-6);
  REQUIRE(rel_error(x.grad(), fd_gradient(x, eval)) < 1e-6);

  auto m = random_leaf({3, 4}, rng);
  auto w4 = probe_weights(4, rng);
  {
    Tape<double> tape;
    auto wt = T::from({4}, w4);
    tape.backward(sum(mul(row(m, 1), wt)));
  }
  auto evalr = [&] { return probe(row(m, 1), w4); };
  REQUIRE(rel_error(m.grad(), fd_gradient(m, evalr)) < 1e-6);
  REQUIRE_THROWS_AS(row(m, 3), IndexError);
}

TEST_CASE("softmax values and properties") {
  auto u = softmax(T::from({3}, {0, 0, 0}));
  for (double v : u.value()) REQUIRE(v == Catch::Approx(1.0 / 3).margin(1e-15));

  REQUIRE(softmax(T::from({1}, {5})).value()[0] == 1.0);

  auto s = softmax(T::from({3}, {1, 2, 3}));
  REQUIRE(s.value()[0] == Catch::Approx(0.09003057317038046).epsilon(1e-9));
  REQUIRE(s.value()[1] == Catch::Approx(0.24472847105479767).epsilon(1e-9));
  REQUIRE(s.value()[2] == Catch::Approx(0.6652409557748219).epsilon(1e-9));

  std::vector<std::uint8_t> mask = {1, 0, 1};
  auto sm = softmax(T::from({3}, {1, 2, 3}), &mask);
  REQUIRE(sm.value()[1] == 0.0);
  REQUIRE(sm.value()[0] + sm.value()[2] == Catch::Approx(1.0).margin(1e-12));

  std::vector<std::uint8_t> none = {0, 0, 0};
  REQUIRE_THROWS_AS(softmax(T::from({3}, {1, 2, 3}), &none), MaskError);

  // stability: huge inputs do not overflow
  auto big = softmax(T::from({2}, {1000, 1001}));
  REQUIRE(big.value()[0] + big.value()[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("softmax gradient") {
  Rng rng(17);
  auto x = random_leaf({6}, rng);
  std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1};
  auto w = probe_weights(6, rng);
  {
    Tape<double> tape;
    auto wt = T::from({6}, w);
    tape.backward(sum(mul(softmax(x, &mask), wt)));
  }
  auto eval = [&] { return probe(softmax(x, &mask), w); };
  REQUIRE(rel_error(x.grad(), fd_gradient(x, eval)) < 1e-6);
}

TEST_CASE("cross entropy values and gradient") {
  auto uniform = cross_entropy(T::from({4}, {0.7, 0.7, 0.7, 0.7}), 2);
  REQUIRE(uniform.item() == Catch::Approx(std::log(4.0)).epsilon(1e-12));

  REQUIRE(cross_entropy(T::from({3}, {100, 0, 0}), 0).item() ==
          Catch::Approx(0.0).margin(1e-12));

  REQUIRE(cross_entropy(T::from({3}, {1, 2, 3}), 2).item() ==
          Catch::Approx(0.40760596444438079).epsilon(1e-9));

  REQUIRE_THROWS_AS(cross_entropy(T::from({3}, {1, 2, 3}), 3), IndexError);

  Rng rng(19);
  auto logits = random_leaf({5}, rng);
  {
    Tape<double> tape;
    tape.backward(cross_entropy(logits, 1));
  }
  // analytic gradient is softmax - onehot
  auto sm = softmax(T::from({5}, logits.value()));
  for (std::size_t i = 0; i < 5; ++i) {
    double expect = sm.value()[i] - (i == 1 ? 1.0 : 0.0);
    REQUIRE(logits.grad()[i] == Catch::Approx(expect).margin(1e-12));
  }
  auto eval = [&] { return cross_entropy(logits, std::size_t{1}).item(); };
  REQUIRE(rel_error(logits.grad(), fd_gradient(logits, eval)) < 1e-6);
}

TEST_CASE("cosine values and gradient") {
  auto e1 = T::from({4}, {1, 0, 0, 0});
  auto e2 = T::from({4}, {0, 1, 0, 0});
  auto e3 = T::from({4}, {0, 0, 1, 0});
  REQUIRE(cosine(e3, e3).item() == 1.0);
  REQUIRE(cosine(e1, e2).item() == 0.0);
  REQUIRE(cosine(T::from({2}, {1, 1}), T::from({2}, {1, 0})).item() ==
          Catch::Approx(0.7071067811865475).epsilon(1e-12));
  REQUIRE_THROWS_AS(cosine(T::from({2}, {0, 0}), T::from({2}, {1, 0})),
                    NumericError);

  Rng rng(23);
  auto a = random_leaf({4}, rng, 0.5, 2.0);
  auto b = random_leaf({4}, rng, 0.5, 2.0);
  {
    Tape<double> tape;
    tape.backward(cosine(a, b));
  }
  auto eval = [&] { return cosine(a, b).item(); };
  REQUIRE(rel_error(a.grad(), fd_gradient(a, eval)) < 1e-6);
  REQUIRE(rel_error(b.grad(), fd_gradient(b, eval)) < 1e-6);
}

TEST_CASE("max_with_index subgradient and ties") {
  auto x = T::from({4}, {1, 3, 3, 2});
  auto [mx, arg] = max_with_index(x);
  REQUIRE(mx.item() == 3.0);
  REQUIRE(arg == 1);  // lowest index wins on ties

  Rng rng(29);
  auto y = random_leaf({5}, rng);
  // nudge values apart so finite differences stay away from the tie surface
  for (std::size_t i = 0; i < 5; ++i) y.value()[i] += 0.01 * double(i);
  {
    Tape<double> tape;
    auto [m, a] = max_with_index(y);
    (void)a;
    tape.backward(m);
  }
  auto eval = [&] { return max_with_index(y).first.item(); };
  REQUIRE(rel_error(y.grad(), fd_gradient(y, eval)) < 1e-6);
}

TEST_CASE("stack and weighted_sum") {
  Rng rng(31);
  std::vector<T> scalars = {random_leaf({1}, rng), random_leaf({1}, rng),
                            random_leaf({1}, rng)};
  auto stacked = stack_scalars(scalars);
  REQUIRE(stacked.numel() == 3);
  REQUIRE(stacked.value()[1] == scalars[1].item());

  auto w = random_leaf({3}, rng, 0.1, 1.0);
  std::vector<T> rows = {random_leaf({4}, rng), random_leaf({4}, rng),
                         random_leaf({4}, rng)};
  auto pw = probe_weights(4, rng);
  {
    Tape<double> tape;
    auto wt = T::from({4}, pw);
    tape.backward(sum(mul(weighted_sum(w, rows), wt)));
  }
  auto eval = [&] { return probe(weighted_sum(w, rows), pw); };
  REQUIRE(rel_error(w.grad(), fd_gradient(w, eval)) < 1e-6);
  REQUIRE(rel_error(rows[0].grad(), fd_gradient(rows[0], eval)) < 1e-6);
  REQUIRE(rel_error(rows[2].grad(), fd_gradient(rows[2], eval)) < 1e-6);

  // masked rows contribute nothing
  std::vector<std::uint8_t> mask = {1, 0, 1};
  auto ws = weighted_sum(w, rows, &mask);
  for (std::size_t k = 0; k < 4; ++k) {
    double expect =
        w.value()[0] * rows[0].value()[k] + w.value()[2] * rows[2].value()[k];
    REQUIRE(ws.value()[k] == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("backward semantics") {
  SECTION("sum of leaves gives ones") {
    auto w = leaf({3}, {1, 2, 3});
    Tape<double> tape;
    tape.backward(sum(w));
    REQUIRE(w.grad() == std::vector<double>{1, 1, 1});
  }
  SECTION("quadratic gives 2w") {
    auto w = leaf({3}, {1, 2, 3});
    Tape<double> tape;
    tape.backward(sum(mul(w, w)));
    REQUIRE(w.grad() == std::vector<double>{2, 4, 6});
  }
  SECTION("non-scalar loss is a shape error") {
    auto w = leaf({3}, {1, 2, 3});
    Tape<double> tape;
    auto out = mul(w, w);
    REQUIRE_THROWS_AS(tape.backward(out), ShapeError);
  }
  SECTION("double backward is a state error") {
    auto w = leaf({2}, {1, 2});
    Tape<double> tape;
    auto loss = sum(w);
    tape.backward(loss);
    REQUIRE(tape.consumed());
    REQUIRE_THROWS_AS(tape.backward(loss), StateError);
  }
  SECTION("free backward without a tape is a state error") {
    auto loss = T::scalar(1).set_requires_grad(true);
    REQUIRE_THROWS_AS(kw2sent::backward(loss), StateError);
  }
  SECTION("gradient accumulates across two uses of one leaf") {
    auto w = leaf({2}, {1, 2});
    Tape<double> tape;
    tape.backward(add(sum(w), sum(w)));
    REQUIRE(w.grad() == std::vector<double>{2, 2});
  }
  SECTION("no recording without an active tape") {
    auto w = leaf({2}, {1, 2});
    auto out = mul(w, w);
    REQUIRE_FALSE(out.requires_grad());
  }
}

TEST_CASE("adam optimizer") {
  SECTION("zero gradients leave parameters unchanged") {
    ParamMap<double> params;
    params["p"] = leaf({2}, {1.5, -0.5});
    auto st = AdamState<double>::init(params);
    params["p"].ensure_grad();
    adam_step(params, st);
    REQUIRE(params["p"].value() == std::vector<double>{1.5, -0.5});
    REQUIRE(st.step == 1);
  }

  SECTION("hand-computed first step") {
    ParamMap<double> params;
    params["p"] = leaf({1}, {1.0});
    auto st = AdamState<double>::init(params);
    params["p"].ensure_grad();
    params["p"].grad()[0] = 1.0;
    adam_step(params, st);
    // first-step bias correction makes the update lr * 1/(1+eps)
    REQUIRE(params["p"].value()[0] ==
            Catch::Approx(1.0 - 0.001 / (1.0 + 1e-8)).margin(1e-15));
  }

  SECTION("missing gradient names the parameter") {
    ParamMap<double> params;
    params["w_q"] = leaf({1}, {1.0});
    auto st = AdamState<double>::init(params);
    REQUIRE_THROWS_WITH(adam_step(params, st),
                        Catch::Matchers::ContainsSubstring("w_q"));
  }

  SECTION("converges on a quadratic") {
    ParamMap<double> params;
    params["p"] = leaf({1}, {0.0});
    auto st = AdamState<double>::init(params, 0.1);
    auto target = T::scalar(3.0);
    for (int i = 0; i < 200; ++i) {
      Tape<double> tape;
      auto d = sub(params["p"], target);
      tape.backward(sum(mul(d, d)));
      adam_step(params, st);
    }
    REQUIRE(std::abs(params["p"].value()[0] - 3.0) < 0.05);
  }

  SECTION("gradient clipping") {
    ParamMap<double> params;
    params["a"] = leaf({2}, {0, 0});
    params["b"] = leaf({1}, {0});
    params["a"].ensure_grad();
    params["b"].ensure_grad();
    params["a"].grad() = {3, 4};
    params["b"].grad() = {12};
    REQUIRE(grad_global_norm(params) == Catch::Approx(13.0));
    clip_gradients(params, 5.0);
    REQUIRE(grad_global_norm(params) == Catch::Approx(5.0).epsilon(1e-12));
    // direction preserved
    REQUIRE(params["a"].grad()[0] / params["a"].grad()[1] ==
            Catch::Approx(0.75));
  }
}

TEST_CASE("deterministic reduction and rng") {
  Rng r1(99), r2(99);
  auto a = T::uniform({64}, -2, 2, r1);
  auto b = T::uniform({64}, -2, 2, r2);
  REQUIRE(a.value() == b.value());

  auto s1 = sum(a).item();
  auto s2 = sum(a).item();
  REQUIRE(s1 == s2);

  Rng rs1(5), rs2(5);
  std::vector<int> v1 = {1, 2, 3, 4, 5, 6, 7}, v2 = v1;
  rs1.shuffle(v1);
  rs2.shuffle(v2);
  REQUIRE(v1 == v2);
}
