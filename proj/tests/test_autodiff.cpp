#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "tenf/autodiff.hpp"
#include "tenf/errors.hpp"
#include "tenf/optim.hpp"
#include "tenf/rng.hpp"

using namespace tenf;

namespace {

Tensor random_tensor(const Shape &shape, Rng &rng, double lo = -1.0, double hi = 1.0)
{
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(lo, hi);
  }
  return t;
}

} // namespace

TEST_CASE("sum loss gives an all-ones gradient")
{
  Rng rng(1);
  ad::Tape tape;
  ad::Node *x = tape.leaf(random_tensor({3, 4}, rng), true);
  ad::Node *loss = tape.sum(x);
  tape.backward(loss);
  for (Index i = 0; i < x->grad.size(); ++i) {
    CHECK(x->grad[i] == 1.0);
  }
}

TEST_CASE("frobenius-squared loss gives gradient 2x")
{
  Rng rng(2);
  ad::Tape tape;
  const Tensor v = random_tensor({5}, rng);
  ad::Node *x = tape.leaf(v, true);
  tape.backward(tape.frobenius_sq(x));
  for (Index i = 0; i < v.size(); ++i) {
    CHECK(x->grad[i] == doctest::Approx(2.0 * v[i]).epsilon(1e-14));
  }
}

TEST_CASE("backward rejects non-scalar losses")
{
  ad::Tape tape;
  ad::Node *x = tape.leaf(Tensor({2, 2}), true);
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}

TEST_CASE("nuclear norm of a diagonal matrix")
{
  // diag(3, -4) has singular values {3, 4}.
  Tensor d({2, 2});
  d(0, 0) = 3.0;
  d(1, 1) = -4.0;
  ad::Tape tape;
  ad::Node *x = tape.leaf(d, true);
  ad::Node *nn = tape.nuclear_norm(x);
  CHECK(nn->scalar() == doctest::Approx(7.0).epsilon(1e-12));
  tape.backward(nn);
  // Subgradient of a diagonal matrix is the sign of each diagonal entry.
  CHECK(x->grad(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x->grad(1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(x->grad(0, 1)) < 1e-12);
  CHECK(std::abs(x->grad(1, 0)) < 1e-12);

  ad::Tape tz;
  ad::Node *zero = tz.leaf(Tensor({3, 2}), true);
  CHECK(tz.nuclear_norm(zero)->scalar() == 0.0);
}

TEST_CASE("nuclear norm gradient matches finite differences on a well-conditioned matrix")
{
  Rng rng(3);
  // Shift the spectrum away from degeneracy with a strong diagonal.
  Tensor m({8, 5});
  for (Index i = 0; i < m.size(); ++i) {
    m[i] = rng.uniform(-0.3, 0.3);
  }
  for (Index i = 0; i < 5; ++i) {
    m(i, i) += 2.0 + static_cast<double>(i);
  }
  auto build = [&](ad::Tape &tape) {
    ad::BoundLoss b;
    b.params.push_back(tape.leaf(m, true));
    b.loss = tape.nuclear_norm(b.params[0]);
    return b;
  };
  Rng pick(4);
  CHECK(ad::check_gradients(build, {&m}, 1e-6, 40, pick) < 1e-3);
}

TEST_CASE("gradient of gather is the inverse permutation scatter")
{
  Rng rng(5);
  const Index n = 7;
  auto perm = std::make_shared<std::vector<Index>>(std::vector<Index>{3, 0, 6, 1, 5, 2, 4});
  const Tensor weights = random_tensor({n}, rng);

  ad::Tape tape;
  ad::Node *x = tape.leaf(random_tensor({n}, rng), true);
  ad::Node *g = tape.gather(x, perm, {n});
  ad::Node *loss = tape.sum(tape.mul(g, tape.leaf(weights)));
  tape.backward(loss);
  for (Index j = 0; j < n; ++j) {
    CHECK(x->grad[(*perm)[j]] == doctest::Approx(weights[j]).epsilon(1e-14));
  }
}

TEST_CASE("gather/scatter chain with duplicate indices passes finite differences")
{
  Rng rng(6);
  Tensor x0 = random_tensor({6}, rng);
  auto map = std::make_shared<std::vector<Index>>(std::vector<Index>{0, 2, 2, 5, 1, 1, 4, 0});
  const Tensor w = random_tensor({8}, rng);
  auto build = [&](ad::Tape &tape) {
    ad::BoundLoss b;
    ad::Node *x = tape.leaf(x0, true);
    b.params.push_back(x);
    ad::Node *g = tape.gather(x, map, {8});
    ad::Node *s = tape.scatter_add(tape.mul(g, tape.leaf(w)), map, {6});
    b.loss = tape.frobenius_sq(s);
    return b;
  };
  Rng pick(7);
  CHECK(ad::check_gradients(build, {&x0}, 1e-6, 6, pick) < 1e-4);
}

TEST_CASE("elements outside the gathered selection get zero gradient")
{
  Rng rng(8);
  ad::Tape tape;
  ad::Node *x = tape.leaf(random_tensor({10}, rng), true);
  auto map = std::make_shared<std::vector<Index>>(std::vector<Index>{2, 7});
  tape.backward(tape.frobenius_sq(tape.gather(x, map, {2})));
  for (Index i = 0; i < 10; ++i) {
    if (i != 2 && i != 7) {
      CHECK(x->grad[i] == 0.0);
    }
  }
}

TEST_CASE("gather and scatter reject out-of-bounds indices")
{
  ad::Tape tape;
  ad::Node *x = tape.leaf(Tensor({4}), true);
  auto bad = std::make_shared<std::vector<Index>>(std::vector<Index>{0, 4});
  CHECK_THROWS_AS(tape.gather(x, bad, Shape{2}), std::invalid_argument);
  auto bad2 = std::make_shared<std::vector<Index>>(std::vector<Index>{0, 1, 2, 9});
  CHECK_THROWS_AS(tape.scatter_add(x, bad2, Shape{5}), std::invalid_argument);
}

TEST_CASE("scatter_add is the exact adjoint of gather")
{
  Rng rng(9);
  const Index n = 12, m = 20;
  auto map = std::make_shared<std::vector<Index>>();
  for (Index j = 0; j < m; ++j) {
    map->push_back(static_cast<Index>(rng.below(n)));
  }
  const Tensor x = random_tensor({n}, rng);
  const Tensor y = random_tensor({m}, rng);

  ad::Tape tape;
  ad::Node *xn = tape.leaf(x);
  ad::Node *gx = tape.gather(xn, map, {m});
  ad::Node *yn = tape.leaf(y);
  ad::Node *sy = tape.scatter_add(yn, map, {n});
  double lhs = 0.0, rhs = 0.0;
  for (Index j = 0; j < m; ++j) {
    lhs += gx->value[j] * y[j];
  }
  for (Index i = 0; i < n; ++i) {
    rhs += x[i] * sy->value[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("fft nodes: inverse identity, norm preservation, adjoint equals inverse")
{
  Rng rng(10);
  const Tensor x = random_tensor({8, 6, 2, 2}, rng);
  ad::Tape tape;
  ad::Node *xn = tape.leaf(x);
  ad::Node *k = tape.fft2c(xn);
  ad::Node *back = tape.ifft2c(k);
  double maxdiff = 0.0, nx = 0.0, nk = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    maxdiff = std::max(maxdiff, std::abs(back->value[i] - x[i]));
    nx += x[i] * x[i];
    nk += k->value[i] * k->value[i];
  }
  CHECK(maxdiff < 1e-12);
  CHECK(std::sqrt(nx) == doctest::Approx(std::sqrt(nk)).epsilon(1e-12));

  // <F x, y> == <x, F^-1 y> (the adjoint of a unitary map is its inverse).
  const Tensor y = random_tensor({8, 6, 2, 2}, rng);
  ad::Tape t2;
  ad::Node *fy = t2.ifft2c(t2.leaf(y));
  double lhs = 0.0, rhs = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    lhs += k->value[i] * y[i];
    rhs += x[i] * fy->value[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("loss through an fft node passes finite differences")
{
  Rng rng(11);
  Tensor x0 = random_tensor({4, 4, 1, 2}, rng);
  const Tensor target = random_tensor({4, 4, 1, 2}, rng);
  auto build = [&](ad::Tape &tape) {
    ad::BoundLoss b;
    ad::Node *x = tape.leaf(x0, true);
    b.params.push_back(x);
    ad::Node *res = tape.add(tape.fft2c(x), tape.scale(tape.leaf(target), -1.0));
    b.loss = tape.frobenius_sq(res);
    return b;
  };
  Rng pick(12);
  CHECK(ad::check_gradients(build, {&x0}, 1e-6, 16, pick) < 1e-6);
}

TEST_CASE("abs-diff-sum value and gradient")
{
  Tensor ramp({4, 1, 1, 2});
  ramp(0, 0, 0, 0) = 0.0;
  ramp(1, 0, 0, 0) = 1.0;
  ramp(2, 0, 0, 0) = 2.0;
  ramp(3, 0, 0, 0) = 3.0;
  ad::Tape tape;
  ad::Node *x = tape.leaf(ramp, true);
  ad::Node *tv = tape.abs_diff_sum(x, 1);
  CHECK(tv->scalar() == doctest::Approx(3.0).epsilon(1e-14));

  Rng rng(13);
  Tensor x0 = random_tensor({3, 4, 2}, rng);
  auto build = [&](ad::Tape &t) {
    ad::BoundLoss b;
    ad::Node *xn = t.leaf(x0, true);
    b.params.push_back(xn);
    ad::Node *loss = t.add(t.abs_diff_sum(xn, 1), t.abs_diff_sum(xn, 2));
    b.loss = t.add(loss, t.abs_diff_sum(xn, 3));
    return b;
  };
  Rng pick(14);
  CHECK(ad::check_gradients(build, {&x0}, 1e-7, 24, pick) < 1e-4);
}

TEST_CASE("mode-product node is differentiable in both arguments")
{
  Rng rng(15);
  Tensor t0 = random_tensor({3, 4, 2}, rng);
  Tensor u0 = random_tensor({5, 4}, rng);
  const Tensor target = random_tensor({3, 5, 2}, rng);
  auto build = [&](ad::Tape &tape) {
    ad::BoundLoss b;
    ad::Node *t = tape.leaf(t0, true);
    ad::Node *u = tape.leaf(u0, true);
    b.params = {t, u};
    ad::Node *y = tape.mode_product(t, u, 2);
    b.loss = tape.frobenius_sq(tape.add(y, tape.scale(tape.leaf(target), -1.0)));
    return b;
  };
  Rng pick(16);
  CHECK(ad::check_gradients(build, {&t0, &u0}, 1e-6, 20, pick) < 1e-6);
}

TEST_CASE("two-layer sine network under a frobenius loss passes finite differences")
{
  Rng rng(17);
  Tensor w1 = random_tensor({6, 1}, rng);
  Tensor b1 = random_tensor({6}, rng, -0.1, 0.1);
  Tensor w2 = random_tensor({3, 6}, rng, -0.4, 0.4);
  Tensor b2 = random_tensor({3}, rng, -0.1, 0.1);
  Tensor coords({5, 1});
  for (Index i = 0; i < 5; ++i) {
    coords[i] = -1.0 + 0.5 * static_cast<double>(i);
  }
  auto build = [&](ad::Tape &tape) {
    ad::BoundLoss b;
    ad::Node *x = tape.leaf(coords);
    ad::Node *w1n = tape.leaf(w1, true);
    ad::Node *b1n = tape.leaf(b1, true);
    ad::Node *w2n = tape.leaf(w2, true);
    ad::Node *b2n = tape.leaf(b2, true);
    b.params = {w1n, b1n, w2n, b2n};
    ad::Node *h = tape.sine(tape.linear(x, w1n, b1n), 30.0);
    ad::Node *out = tape.linear(h, w2n, b2n);
    b.loss = tape.frobenius_sq(out);
    return b;
  };
  Rng pick(18);
  CHECK(ad::check_gradients(build, {&w1, &b1, &w2, &b2}, 1e-7, 12, pick) < 1e-6);
}

TEST_CASE("quadratic loss finite differences are exact to 1e-8")
{
  Rng rng(19);
  Tensor x0 = random_tensor({6}, rng);
  auto build = [&](ad::Tape &tape) {
    ad::BoundLoss b;
    ad::Node *x = tape.leaf(x0, true);
    b.params.push_back(x);
    b.loss = tape.frobenius_sq(x);
    return b;
  };
  Rng pick(20);
  CHECK(ad::check_gradients(build, {&x0}, 1e-6, 6, pick) < 1e-8);
}

TEST_CASE("backward is deterministic and linear in the loss scale")
{
  Rng rng(21);
  const Tensor v = random_tensor({4, 4}, rng);
  ad::Tape tape;
  ad::Node *x = tape.leaf(v, true);
  ad::Node *y = tape.mul(tape.sine(x, 2.0), x);
  ad::Node *loss = tape.sum(y);
  tape.backward(loss);
  std::vector<double> first(x->grad.data(), x->grad.data() + x->grad.size());
  tape.backward(loss);
  CHECK(std::memcmp(first.data(), x->grad.data(), first.size() * sizeof(double)) == 0);

  ad::Tape t2;
  ad::Node *x2 = t2.leaf(v, true);
  ad::Node *y2 = t2.mul(t2.sine(x2, 2.0), x2);
  t2.backward(t2.scale(t2.sum(y2), 2.5));
  for (Index i = 0; i < x2->grad.size(); ++i) {
    CHECK(x2->grad[i] == doctest::Approx(2.5 * first[i]).epsilon(1e-13));
  }
}

TEST_CASE("magnitude node value and gradient")
{
  Tensor v({2, 2});
  v(0, 0) = 3.0;
  v(1, 0) = 0.0;
  v(0, 1) = 4.0;
  v(1, 1) = 0.0;
  ad::Tape tape;
  ad::Node *x = tape.leaf(v, true);
  ad::Node *m = tape.magnitude(x);
  CHECK(m->value[0] == doctest::Approx(5.0));
  CHECK(m->value[1] == 0.0);
  tape.backward(tape.sum(m));
  CHECK(x->grad(0, 0) == doctest::Approx(0.6));
  CHECK(x->grad(0, 1) == doctest::Approx(0.8));
  CHECK(x->grad(1, 0) == 0.0); // zero magnitude: subgradient 0
}

TEST_CASE("adam: zero gradient and zero decay leave parameters unchanged")
{
  Tensor p({3}, {1.0, -2.0, 3.0});
  Tensor g({3});
  AdamState state;
  std::vector<ParamRef> refs = {{"p", &p, true}};
  adam_step(refs, {&g}, state, 1e-3, 0.0);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
  CHECK(p[2] == 3.0);
}

TEST_CASE("adam: parameter moves against the gradient sign")
{
  Tensor p({1}, {0.5});
  Tensor g({1}, {2.0});
  AdamState state;
  std::vector<ParamRef> refs = {{"p", &p, false}};
  double prev = p[0];
  for (int i = 0; i < 50; ++i) {
    adam_step(refs, {&g}, state, 1e-3, 0.0);
    CHECK(p[0] < prev);
    prev = p[0];
  }
}

TEST_CASE("adam: first step from zero state has magnitude ~ lr")
{
  // m1 = 0.1, v1 = 1e-3; bias-corrected mhat = 1, vhat = 1; step = lr/(1+eps).
  Tensor p({1}, {0.0});
  Tensor g({1}, {1.0});
  AdamState state;
  std::vector<ParamRef> refs = {{"p", &p, false}};
  adam_step(refs, {&g}, state, 1e-4, 0.0);
  CHECK(p[0] == doctest::Approx(-1e-4).epsilon(1e-7));
}

TEST_CASE("adam: non-finite gradient names the parameter")
{
  Tensor p({2});
  Tensor g({2}, {0.0, std::numeric_limits<double>::quiet_NaN()});
  AdamState state;
  std::vector<ParamRef> refs = {{"net1.w1", &p, false}};
  try {
    adam_step(refs, {&g}, state, 1e-3, 0.0);
    FAIL("expected TrainingError");
  } catch (const TrainingError &e) {
    CHECK(e.parameter == "net1.w1");
  }
}

TEST_CASE("adam: decoupled decay shrinks before the increment, coupled adds to the gradient")
{
  Tensor p1({1}, {1.0});
  Tensor p2({1}, {1.0});
  Tensor g({1}, {0.0});
  AdamState s1, s2;
  std::vector<ParamRef> r1 = {{"a", &p1, true}};
  std::vector<ParamRef> r2 = {{"b", &p2, true}};
  adam_step(r1, {&g}, s1, 0.01, 0.5, false);
  // Decoupled with zero gradient: p -= lr*wd*p only.
  CHECK(p1[0] == doctest::Approx(1.0 - 0.01 * 0.5 * 1.0).epsilon(1e-12));
  adam_step(r2, {&g}, s2, 0.01, 0.5, true);
  // Coupled: the decay term becomes the gradient and Adam normalizes it.
  CHECK(p2[0] < 1.0);
  CHECK(p2[0] != doctest::Approx(1.0 - 0.01 * 0.5 * 1.0).epsilon(1e-12));
}

TEST_CASE("learning-rate schedule reproduces the documented decade values exactly")
{
  LrSchedule s;
  CHECK(lr_at(s, 0) == 1e-4);
  CHECK(lr_at(s, 499) == 1e-4);
  CHECK(lr_at(s, 500) == 2e-5);
  CHECK(lr_at(s, 999) == 2e-5);
  CHECK(lr_at(s, 1000) == 4e-6);
  CHECK(lr_at(s, 12000) > 0.0);
  CHECK_THROWS_AS(lr_at(s, -1), std::invalid_argument);
}
