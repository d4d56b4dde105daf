#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "wmr/nn.hpp"
#include "wmr/rng.hpp"
#include "wmr/tensor.hpp"

using namespace wmr;

TEST_CASE("elementwise primitives: identity points") {
  Tensor x = Tensor::from({3}, {0.0f, 1.0f, -1.0f});
  Tensor e = elu(x);
  CHECK(e.at(0) == doctest::Approx(0.0));
  CHECK(e.at(1) == doctest::Approx(1.0));
  CHECK(e.at(2) == doctest::Approx(std::expm1(-1.0)));
  CHECK(sigmoid(Tensor::from({1}, {0.0f})).item() == doctest::Approx(0.5));
  CHECK(wmr::tanh(Tensor::from({1}, {0.0f})).item() == doctest::Approx(0.0));
}

TEST_CASE("matmul with identity rows selects input rows") {
  // A = I3 (rows of the identity), B arbitrary [3,1]
  Tensor a = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor b = Tensor::from({3, 1}, {2.5f, -3.0f, 7.0f});
  Tensor c = matmul(a, b);
  CHECK(c.at(0) == doctest::Approx(2.5));
  CHECK(c.at(1) == doctest::Approx(-3.0));
  CHECK(c.at(2) == doctest::Approx(7.0));
}

TEST_CASE("matmul shape mismatch reports both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 1});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), ShapeError);
}

TEST_CASE("non-finite output names the op") {
  Tensor x = Tensor::from({1}, {-1.0f});
  CHECK_THROWS_WITH_AS(wmr::log(x), doctest::Contains("log"), NumericalError);
}

TEST_CASE("backward: simple scalar derivatives") {
  SUBCASE("f(x) = x*x at x=3 gives 6") {
    Tape t;
    Param x{"x", Tensor::from({1}, {3.0f}), {}};
    watch_params(&t, {&x});
    Tensor loss = mul(x.live, x.live);
    t.backward(loss);
    CHECK(t.grad(x.live.node)[0] == doctest::Approx(6.0));
  }
  SUBCASE("f(x) = sigmoid(x) at 0 gives 0.25") {
    Tape t;
    Param x{"x", Tensor::from({1}, {0.0f}), {}};
    watch_params(&t, {&x});
    Tensor loss = sigmoid(x.live);
    t.backward(loss);
    CHECK(t.grad(x.live.node)[0] == doctest::Approx(0.25));
  }
  SUBCASE("loss must be scalar") {
    Tape t;
    Param x{"x", Tensor::from({2}, {0.0f, 1.0f}), {}};
    watch_params(&t, {&x});
    Tensor y = square(x.live);
    CHECK_THROWS_AS(t.backward(y), ShapeError);
  }
}

TEST_CASE("backward: random 3-layer MLP matches central differences < 1e-4") {
  Pcg32 rng(7, 1);
  Linear l1, l2, l3;
  l1.init("l1", 4, 8, rng);
  l2.init("l2", 8, 8, rng);
  l3.init("l3", 8, 2, rng);
  Tensor x = Tensor::zeros({3, 4});
  for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = static_cast<float>(rng.uniform(-1, 1));

  std::vector<Param*> params;
  for (auto* p : l1.params()) params.push_back(p);
  for (auto* p : l2.params()) params.push_back(p);
  for (auto* p : l3.params()) params.push_back(p);

  auto build = [&](Tape* t) {
    watch_params(t, params);
    Tensor h = elu(l1.forward(x));
    h = wmr::tanh(l2.forward(h));
    return mean(square(l3.forward(h)));
  };
  CHECK(test::max_rel_error(build, params, 1e-3, 0.1) < 1e-4);
}

TEST_CASE("stop_gradient") {
  SUBCASE("forward is identity bit-for-bit") {
    Tape t;
    Param x{"x", Tensor::from({2}, {1.5f, -2.0f}), {}};
    watch_params(&t, {&x});
    Tensor y = stop_gradient(x.live);
    CHECK(y.at(0) == 1.5f);
    CHECK(y.at(1) == -2.0f);
    CHECK(y.data == x.live.data);  // shares storage
  }
  SUBCASE("loss = sum(sg(x)*w): d/dx = 0 bitwise, d/dw = x") {
    Tape t;
    Param x{"x", Tensor::from({2}, {2.0f, -3.0f}), {}};
    Param w{"w", Tensor::from({2}, {0.5f, 4.0f}), {}};
    watch_params(&t, {&x, &w});
    Tensor loss = sum(mul(stop_gradient(x.live), w.live));
    t.backward(loss);
    CHECK(t.grad(x.live.node)[0] == 0.0f);
    CHECK(t.grad(x.live.node)[1] == 0.0f);
    CHECK(t.grad(w.live.node)[0] == doctest::Approx(2.0));
    CHECK(t.grad(w.live.node)[1] == doctest::Approx(-3.0));
  }
  SUBCASE("loss = sum((x + sg(x))^2) at x=1: only live branch contributes") {
    Param x{"x", Tensor::from({1}, {1.0f}), {}};
    auto build = [&](Tape* t) {
      watch_params(t, {&x});
      return sum(square(add(x.live, stop_gradient(x.live))));
    };
    auto ad = test::ad_grads(build, {&x});
    CHECK(ad[0][0] == doctest::Approx(4.0));  // 2*(2x)*1
    // finite differences see the full dependency (8), confirming the cutoff
    // is a property of backward, not of the value
    CHECK(test::fd_grad(build, x, 0) == doctest::Approx(8.0).epsilon(1e-3));
  }
}

TEST_CASE("lstm_cell") {
  Pcg32 rng(3, 9);
  LstmCell cell;
  cell.init("lstm", 3, 4, rng);

  SUBCASE("all-zero weights and state give zero output") {
    for (auto* p : cell.params())
      for (int64_t i = 0; i < p->value.numel(); ++i) p->value.at(i) = 0.0f;
    watch_params(nullptr, cell.params());
    Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    auto [out, st] = cell.forward(x, LstmState::zeros(2, 4));
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out.at(i) == 0.0f);
  }

  SUBCASE("saturated forget gate preserves the cell state") {
    for (auto* p : cell.params())
      for (int64_t i = 0; i < p->value.numel(); ++i) p->value.at(i) = 0.0f;
    // forget bias -> +inf limit, input bias -> -inf limit
    for (int j = 4; j < 8; ++j) cell.b.value.at(j) = 50.0f;
    for (int j = 0; j < 4; ++j) cell.b.value.at(j) = -50.0f;
    watch_params(nullptr, cell.params());
    LstmState st = LstmState::zeros(1, 4);
    for (int j = 0; j < 4; ++j) st.cell.at(j) = 0.37f * static_cast<float>(j + 1);
    Tensor x = Tensor::from({1, 3}, {0.3f, -0.8f, 1.1f});
    auto [out, st2] = cell.forward(x, st);
    for (int j = 0; j < 4; ++j)
      CHECK(st2.cell.at(j) == doctest::Approx(st.cell.at(j)).epsilon(1e-6));
  }

  SUBCASE("gradients vs finite differences < 1e-3") {
    Tensor x0 = Tensor::zeros({2, 3});
    Tensor x1 = Tensor::zeros({2, 3});
    for (int64_t i = 0; i < x0.numel(); ++i) {
      x0.at(i) = static_cast<float>(rng.uniform(-1, 1));
      x1.at(i) = static_cast<float>(rng.uniform(-1, 1));
    }
    auto params = cell.params();
    auto build = [&](Tape* t) {
      watch_params(t, params);
      auto [o1, s1] = cell.forward(x0, LstmState::zeros(2, 4));
      auto [o2, s2] = cell.forward(x1, s1);  // two steps exercise wh through time
      return mean(square(o2));
    };
    CHECK(test::max_rel_error(build, {params[0], params[1], params[2]}, 1e-3) < 1e-3);
  }

  SUBCASE("old state is not modified by forward") {
    watch_params(nullptr, cell.params());
    LstmState st = LstmState::zeros(1, 4);
    Tensor x = Tensor::from({1, 3}, {1.0f, 0.5f, -0.2f});
    auto [out, st2] = cell.forward(x, st);
    for (int j = 0; j < 4; ++j) CHECK(st.cell.at(j) == 0.0f);
  }
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Param p{"p", Tensor::from({3}, {1.0f, -2.0f, 0.5f}), {}};
    Adam opt;
    opt.init({&p});
    std::vector<float> g(3, 0.0f);
    opt.step({&p}, {&g});
    CHECK(p.value.at(0) == 1.0f);
    CHECK(p.value.at(1) == -2.0f);
    CHECK(p.value.at(2) == 0.5f);
  }
  SUBCASE("first step is about -lr * sign(g)") {
    Param p{"p", Tensor::from({1}, {0.0f}), {}};
    Adam opt;
    opt.lr = 1e-3f;
    opt.init({&p});
    std::vector<float> g{0.5f};
    opt.step({&p}, {&g});
    CHECK(p.value.at(0) == doctest::Approx(-1e-3).epsilon(1e-4));
  }
  SUBCASE("two identical gradients: second step no larger than the first") {
    Param p{"p", Tensor::from({1}, {0.0f}), {}};
    Adam opt;
    opt.lr = 1e-3f;
    opt.init({&p});
    std::vector<float> g{0.5f};
    opt.step({&p}, {&g});
    const double d1 = std::fabs(p.value.at(0) - 0.0);
    const float mid = p.value.at(0);
    opt.step({&p}, {&g});
    const double d2 = std::fabs(p.value.at(0) - mid);
    CHECK(d2 <= d1 * (1.0 + 1e-6));
  }
  SUBCASE("non-finite gradient raises") {
    Param p{"p", Tensor::from({1}, {0.0f}), {}};
    Adam opt;
    opt.init({&p});
    std::vector<float> g{std::nanf("")};
    CHECK_THROWS_AS(opt.step({&p}, {&g}), NumericalError);
  }
}

TEST_CASE("tape determinism: identical seeds give bitwise-identical grads") {
  auto run = [] {
    Pcg32 rng(11, 2);
    Linear l1, l2;
    l1.init("a", 5, 7, rng);
    l2.init("b", 7, 1, rng);
    Tensor x = Tensor::zeros({4, 5});
    for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = static_cast<float>(rng.uniform(-1, 1));
    Tape t;
    std::vector<Param*> ps;
    for (auto* p : l1.params()) ps.push_back(p);
    for (auto* p : l2.params()) ps.push_back(p);
    watch_params(&t, ps);
    Tensor loss = mean(square(l2.forward(elu(l1.forward(x)))));
    t.backward(loss);
    std::vector<float> all;
    all.push_back(loss.item());
    for (auto* p : ps)
      for (float gi : t.grad(p->live.node)) all.push_back(gi);
    return all;
  };
  auto r1 = run();
  auto r2 = run();
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);
}

TEST_CASE("unused parameters get exactly zero gradient, never stale values") {
  Tape t;
  Param used{"u", Tensor::from({1}, {2.0f}), {}};
  Param unused{"v", Tensor::from({2}, {1.0f, 1.0f}), {}};
  watch_params(&t, {&used, &unused});
  Tensor loss = square(used.live);
  t.backward(loss);
  CHECK(t.grad(unused.live.node)[0] == 0.0f);
  CHECK(t.grad(unused.live.node)[1] == 0.0f);
}

TEST_CASE("reductions, slicing, masking") {
  SUBCASE("mean/sum/row_sum") {
    Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(sum(a).item() == doctest::Approx(21.0));
    CHECK(mean(a).item() == doctest::Approx(3.5));
    Tensor rs = row_sum(a);
    CHECK(rs.at(0) == doctest::Approx(6.0));
    CHECK(rs.at(1) == doctest::Approx(15.0));
  }
  SUBCASE("concat/slice round structure") {
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from({2, 1}, {9, 8});
    Tensor c = concat_cols({a, b});
    CHECK(c.shape == Shape{2, 3});
    CHECK(c.at(2) == 9.0f);
    CHECK(c.at(5) == 8.0f);
    Tensor s = slice_cols(c, 2, 3);
    CHECK(s.at(0) == 9.0f);
    CHECK(s.at(1) == 8.0f);
  }
  SUBCASE("mask_rows zeroes dropped rows in value and grad") {
    Param a{"a", Tensor::from({2, 2}, {1, 2, 3, 4}), {}};
    auto build = [&](Tape* t) {
      watch_params(t, {&a});
      return sum(mask_rows(a.live, {0, 1}));
    };
    auto g = test::ad_grads(build, {&a});
    CHECK(g[0][0] == 0.0f);
    CHECK(g[0][1] == 0.0f);
    CHECK(g[0][2] == 1.0f);
    CHECK(g[0][3] == 1.0f);
  }
  SUBCASE("clamp gradient is zero outside the range") {
    Param a{"a", Tensor::from({3}, {-5.0f, 0.5f, 5.0f}), {}};
    auto build = [&](Tape* t) {
      watch_params(t, {&a});
      return sum(clamp(a.live, -1.0f, 1.0f));
    };
    auto g = test::ad_grads(build, {&a});
    CHECK(g[0][0] == 0.0f);
    CHECK(g[0][1] == 1.0f);
    CHECK(g[0][2] == 0.0f);
  }
}

TEST_CASE("gaussian log-prob matches direct formula") {
  Pcg32 rng(5, 5);
  const int b = 3, n = 4;
  Tensor mean_t = Tensor::zeros({b, n});
  Tensor act = Tensor::zeros({b, n});
  Tensor logstd = Tensor::zeros({n});
  for (int64_t i = 0; i < mean_t.numel(); ++i) {
    mean_t.at(i) = static_cast<float>(rng.uniform(-1, 1));
    act.at(i) = static_cast<float>(rng.uniform(-1, 1));
  }
  for (int j = 0; j < n; ++j) logstd.at(j) = static_cast<float>(rng.uniform(-1, 0.5));
  Tensor lp = gaussian_log_prob(mean_t, broadcast_row(logstd, b), act);
  for (int i = 0; i < b; ++i) {
    double want = -0.5 * n * std::log(2.0 * M_PI);
    for (int j = 0; j < n; ++j) {
      const double mu = mean_t.at(i * n + j), aa = act.at(i * n + j), ls = logstd.at(j);
      const double z = (aa - mu) / std::exp(ls);
      want += -0.5 * z * z - ls;
    }
    CHECK(lp.at(i) == doctest::Approx(want).epsilon(1e-4));
  }
}
