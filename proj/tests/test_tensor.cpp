#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tenf/rng.hpp"
#include "tenf/tensor.hpp"

using namespace tenf;

namespace {

Tensor random_tensor(const Shape &shape, Rng &rng)
{
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-1.0, 1.0);
  }
  return t;
}

// Independent unfolding oracle: walk every multi-index, place the element at
// (row = index of `mode`, col = remaining indices packed with lower modes
// varying fastest).
MatrixX<double> unfold_oracle(const Tensor &t, int mode)
{
  const Shape &shape = t.shape();
  const Index d = t.rank();
  Index cols = 1;
  for (Index m = 0; m < d; ++m) {
    if (m != mode - 1) {
      cols *= shape[m];
    }
  }
  MatrixX<double> out(shape[mode - 1], cols);
  std::vector<Index> idx(d, 0);
  for (Index flat = 0; flat < t.size(); ++flat) {
    Index col = 0;
    Index stride = 1;
    for (Index m = 0; m < d; ++m) {
      if (m == mode - 1) {
        continue;
      }
      col += idx[m] * stride;
      stride *= shape[m];
    }
    out(idx[mode - 1], col) = t[flat];
    for (Index m = 0; m < d; ++m) { // advance multi-index, mode 1 fastest
      if (++idx[m] < shape[m]) {
        break;
      }
      idx[m] = 0;
    }
  }
  return out;
}

// Brute-force Tucker contraction by explicit nested summation.
Tensor tucker_oracle(const Tensor &core, const std::vector<MatrixX<double>> &factors)
{
  Shape out_shape;
  for (const auto &f : factors) {
    out_shape.push_back(f.rows());
  }
  Tensor out(out_shape);
  const Index d = core.rank();
  std::vector<Index> oi(d, 0);
  for (Index of = 0; of < out.size(); ++of) {
    double acc = 0.0;
    std::vector<Index> ci(d, 0);
    for (Index cf = 0; cf < core.size(); ++cf) {
      double term = core[cf];
      for (Index m = 0; m < d; ++m) {
        term *= factors[m](oi[m], ci[m]);
      }
      acc += term;
      for (Index m = 0; m < d; ++m) {
        if (++ci[m] < core.shape()[m]) {
          break;
        }
        ci[m] = 0;
      }
    }
    out[of] = acc;
    for (Index m = 0; m < d; ++m) {
      if (++oi[m] < out_shape[m]) {
        break;
      }
      oi[m] = 0;
    }
  }
  return out;
}

double max_abs_diff(const Tensor &a, const Tensor &b)
{
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

} // namespace

TEST_CASE("tensor shape validation")
{
  CHECK_THROWS_AS(Tensor(Shape{}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor(Shape{2, 0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor(Shape{1, 1, 1, 1, 1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1.0}), std::invalid_argument);
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
}

TEST_CASE("unfold of a matrix along mode 1 is the matrix itself")
{
  Tensor m({2, 2}, {1.0, 2.0, 3.0, 4.0});
  const auto u = unfold(m, 1);
  CHECK(u(0, 0) == 1.0);
  CHECK(u(1, 0) == 2.0);
  CHECK(u(0, 1) == 3.0);
  CHECK(u(1, 1) == 4.0);
}

TEST_CASE("unfold of the 2x2x2 counting tensor matches the enumeration oracle")
{
  Tensor t({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  const auto u1 = unfold(t, 1);
  // Frozen from the oracle: [[1,3,5,7],[2,4,6,8]].
  const double expected[2][4] = {{1, 3, 5, 7}, {2, 4, 6, 8}};
  for (Index r = 0; r < 2; ++r) {
    for (Index c = 0; c < 4; ++c) {
      CHECK(u1(r, c) == expected[r][c]);
    }
  }
  for (int mode = 1; mode <= 3; ++mode) {
    CHECK((unfold(t, mode) - unfold_oracle(t, mode)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("unfold matches the oracle on random tensors of every mode")
{
  Rng rng(7);
  for (const Shape &shape : {Shape{3, 4, 5}, Shape{2, 3, 2, 4}, Shape{2, 2, 3, 2, 2}}) {
    const Tensor t = random_tensor(shape, rng);
    for (int mode = 1; mode <= t.rank(); ++mode) {
      CHECK((unfold(t, mode) - unfold_oracle(t, mode)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("fold inverts unfold bit-exactly")
{
  Rng rng(11);
  const Tensor t = random_tensor({3, 4, 5}, rng);
  for (int mode = 1; mode <= 3; ++mode) {
    const Tensor back = fold(unfold(t, mode), mode, t.shape());
    CHECK(max_abs_diff(back, t) == 0.0);
  }
  // Frozen example: folding the mode-1 unfolding of 1..8 restores 1..8.
  Tensor counting({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  const Tensor restored = fold(unfold(counting, 1), 1, {2, 2, 2});
  for (Index i = 0; i < 8; ++i) {
    CHECK(restored[i] == counting[i]);
  }
  // 1xN row folded along mode 1 of shape (1, N).
  MatrixX<double> row(1, 4);
  row << 9, 8, 7, 6;
  const Tensor rt = fold(row, 1, {1, 4});
  for (Index i = 0; i < 4; ++i) {
    CHECK(rt[i] == row(0, i));
  }
  // unfold(fold(m)) == m.
  const auto m = unfold(t, 2);
  CHECK((unfold(fold(m, 2, t.shape()), 2) - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fold rejects inconsistent extents")
{
  MatrixX<double> m(2, 3);
  m.setZero();
  CHECK_THROWS_AS(fold(m, 1, Shape{2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(fold(m, 4, Shape{2, 3}), std::invalid_argument);
}

TEST_CASE("mode product by the identity leaves the tensor unchanged")
{
  Rng rng(3);
  const Tensor t = random_tensor({3, 4, 2}, rng);
  for (int mode = 1; mode <= 3; ++mode) {
    MatrixX<double> id = MatrixX<double>::Identity(t.shape()[mode - 1], t.shape()[mode - 1]);
    CHECK(max_abs_diff(mode_product(t, id, mode), t) == 0.0);
  }
}

TEST_CASE("mode product by a row of ones sums over the mode")
{
  Rng rng(4);
  const Tensor t = random_tensor({3, 4, 2}, rng);
  for (int mode = 1; mode <= 3; ++mode) {
    MatrixX<double> ones = MatrixX<double>::Ones(1, t.shape()[mode - 1]);
    const Tensor summed = mode_product(t, ones, mode);
    // Direct summation oracle.
    Shape out_shape = t.shape();
    out_shape[mode - 1] = 1;
    Tensor expect(out_shape);
    for (Index k = 0; k < t.shape()[mode - 1]; ++k) {
      const auto s = detail::mode_split(t, mode);
      for (Index b = 0; b < s.outer; ++b) {
        for (Index a = 0; a < s.inner; ++a) {
          expect[a + s.inner * b] += t[a + s.inner * (k + s.mid * b)];
        }
      }
    }
    CHECK(max_abs_diff(summed, expect) < 1e-12);
  }
}

TEST_CASE("mode product equals the unfold-multiply-fold definition")
{
  Rng rng(5);
  const Tensor t = random_tensor({3, 4, 5}, rng);
  for (int mode = 1; mode <= 3; ++mode) {
    MatrixX<double> a(2, t.shape()[mode - 1]);
    for (Index i = 0; i < a.size(); ++i) {
      a(i / a.cols(), i % a.cols()) = rng.uniform(-1.0, 1.0);
    }
    Shape out_shape = t.shape();
    out_shape[mode - 1] = a.rows();
    const Tensor direct = mode_product(t, a, mode);
    const Tensor via_unfold = fold(MatrixX<double>(a * unfold(t, mode)), mode, out_shape);
    CHECK(max_abs_diff(direct, via_unfold) < 1e-12);
  }
}

TEST_CASE("mode products along distinct modes commute")
{
  Rng rng(6);
  const Tensor t = random_tensor({3, 3, 3}, rng);
  MatrixX<double> a(3, 3), b(3, 3);
  for (Index i = 0; i < 9; ++i) {
    a(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
    b(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
  }
  const Tensor ab = mode_product(mode_product(t, a, 1), b, 2);
  const Tensor ba = mode_product(mode_product(t, b, 2), a, 1);
  CHECK(max_abs_diff(ab, ba) < 1e-12);
}

TEST_CASE("mode product dimension checks")
{
  Tensor t({2, 3});
  MatrixX<double> bad(2, 4);
  bad.setZero();
  CHECK_THROWS_AS(mode_product(t, bad, 1), std::invalid_argument);
  CHECK_THROWS_AS(mode_product(t, bad, 3), std::invalid_argument);
  CHECK_THROWS_AS(unfold(t, 0), std::invalid_argument);
}

TEST_CASE("unfold and mode product are linear in the tensor")
{
  Rng rng(8);
  const Tensor t1 = random_tensor({3, 4, 2}, rng);
  const Tensor t2 = random_tensor({3, 4, 2}, rng);
  const double alpha = 0.7, beta = -1.3;
  Tensor mix(t1.shape());
  for (Index i = 0; i < mix.size(); ++i) {
    mix[i] = alpha * t1[i] + beta * t2[i];
  }
  MatrixX<double> a(2, 4);
  for (Index i = 0; i < a.size(); ++i) {
    a(i / 4, i % 4) = rng.uniform(-1.0, 1.0);
  }
  const auto lhs_u = unfold(mix, 2);
  const auto rhs_u = (alpha * unfold(t1, 2) + beta * unfold(t2, 2)).eval();
  CHECK((lhs_u - rhs_u).cwiseAbs().maxCoeff() < 1e-12);

  const Tensor lhs = mode_product(mix, a, 2);
  const Tensor p1 = mode_product(t1, a, 2);
  const Tensor p2 = mode_product(t2, a, 2);
  Tensor rhs(lhs.shape());
  for (Index i = 0; i < rhs.size(); ++i) {
    rhs[i] = alpha * p1[i] + beta * p2[i];
  }
  CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("tucker_reconstruct with identity factors is the identity")
{
  Rng rng(9);
  const Tensor t = random_tensor({2, 3, 4}, rng);
  std::vector<MatrixX<double>> factors;
  for (Index m = 0; m < t.rank(); ++m) {
    factors.push_back(MatrixX<double>::Identity(t.shape()[m], t.shape()[m]));
  }
  CHECK(max_abs_diff(tucker_reconstruct(t, factors), t) == 0.0);
}

TEST_CASE("rank-1 tucker is the outer product")
{
  Rng rng(10);
  Tensor core({1, 1}, {1.0});
  MatrixX<double> u(4, 1), v(3, 1);
  for (Index i = 0; i < 4; ++i) {
    u(i, 0) = rng.uniform(-1.0, 1.0);
  }
  for (Index i = 0; i < 3; ++i) {
    v(i, 0) = rng.uniform(-1.0, 1.0);
  }
  const Tensor t = tucker_reconstruct(core, {u, v});
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < 4; ++i) {
      CHECK(t(i, j) == doctest::Approx(u(i, 0) * v(j, 0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("tucker_reconstruct matches the nested-loop oracle")
{
  Rng rng(12);
  const Tensor core = random_tensor({2, 2, 2}, rng);
  std::vector<MatrixX<double>> factors;
  for (int m = 0; m < 3; ++m) {
    MatrixX<double> f(4, 2);
    for (Index i = 0; i < f.size(); ++i) {
      f(i / 2, i % 2) = rng.uniform(-1.0, 1.0);
    }
    factors.push_back(f);
  }
  CHECK(max_abs_diff(tucker_reconstruct(core, factors), tucker_oracle(core, factors)) < 1e-12);
}

TEST_CASE("tucker_reconstruct validates factor shapes")
{
  Tensor core({2, 2});
  std::vector<MatrixX<double>> factors = {MatrixX<double>::Identity(2, 2)};
  CHECK_THROWS_AS(tucker_reconstruct(core, factors), std::invalid_argument);
  factors.push_back(MatrixX<double>::Identity(3, 3));
  CHECK_THROWS_AS(tucker_reconstruct(core, factors), std::invalid_argument);
}

TEST_CASE("round trips hold on larger random mixed-extent tensors")
{
  Rng rng(13);
  const Tensor t = random_tensor({4, 4, 4, 2, 3}, rng);
  for (int mode = 1; mode <= 5; ++mode) {
    CHECK(max_abs_diff(fold(unfold(t, mode), mode, t.shape()), t) == 0.0);
  }
}
