#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tenf/errors.hpp"

// Dense real N-D tensor with the mode algebra (unfold, fold, mode product,
// Tucker reconstruction) the rest of the library builds on.
//
// Storage convention: column-major generalized to N modes, i.e. the mode-1
// index varies fastest. The mode-i unfolding X_(i) places mode i along the
// rows; column c decodes to the remaining indices with lower-numbered modes
// varying fastest. Under this convention unfold(t, 1) is a plain reshape.
// Modes are 1-based throughout.

namespace tenf {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline Index shape_product(const Shape &shape)
{
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<Index>());
}

inline std::string shape_string(const Shape &shape)
{
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    os << shape[i] << (i + 1 < shape.size() ? "," : "");
  }
  os << ")";
  return os.str();
}

constexpr Index kMaxModes = 6;

template <typename Scalar> class TensorT {
public:
  TensorT() = default;

  explicit TensorT(Shape shape)
      : shape_(std::move(shape))
  {
    validate_shape(shape_);
    data_.assign(shape_product(shape_), Scalar{0});
  }

  TensorT(Shape shape, std::vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data))
  {
    validate_shape(shape_);
    if (shape_product(shape_) != static_cast<Index>(data_.size())) {
      throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_string(shape_));
    }
  }

  static TensorT constant(Shape shape, Scalar value)
  {
    TensorT t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  Index rank() const { return static_cast<Index>(shape_.size()); }
  const Shape &shape() const { return shape_; }
  Index extent(int mode) const { return shape_[mode - 1]; }
  Index size() const { return static_cast<Index>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar *data() { return data_.data(); }
  const Scalar *data() const { return data_.data(); }

  Scalar &operator[](Index i)
  {
    assert(i >= 0 && i < size());
    return data_[i];
  }
  const Scalar &operator[](Index i) const
  {
    assert(i >= 0 && i < size());
    return data_[i];
  }

  template <typename... Ix> Scalar &operator()(Ix... ix) { return data_[flat(ix...)]; }
  template <typename... Ix> const Scalar &operator()(Ix... ix) const { return data_[flat(ix...)]; }

  // Flat offset of a multi-index (0-based per mode, mode 1 fastest).
  template <typename... Ix> Index flat(Ix... ix) const
  {
    static_assert(sizeof...(Ix) > 0);
    assert(static_cast<Index>(sizeof...(Ix)) == rank());
    const Index idx[] = {static_cast<Index>(ix)...};
    Index off = 0;
    Index stride = 1;
    for (size_t m = 0; m < sizeof...(Ix); ++m) {
      assert(idx[m] >= 0 && idx[m] < shape_[m]);
      off += idx[m] * stride;
      stride *= shape_[m];
    }
    return off;
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), Scalar{0}); }

  bool same_shape(const TensorT &other) const { return shape_ == other.shape_; }

private:
  static void validate_shape(const Shape &shape)
  {
    if (shape.empty() || static_cast<Index>(shape.size()) > kMaxModes) {
      throw std::invalid_argument("tensor must have between 1 and 6 modes, got " +
                                  std::to_string(shape.size()));
    }
    for (Index n : shape) {
      if (n < 1) {
        throw std::invalid_argument("tensor extents must be positive, got " + shape_string(shape));
      }
    }
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using Tensor = TensorT<double>;

namespace detail {

// Split a shape around `mode` into (inner, mid, outer): flat index of element
// (a, j, b) is a + inner*(j + mid*b).
struct ModeSplit {
  Index inner;
  Index mid;
  Index outer;
};

template <typename Scalar>
ModeSplit mode_split(const TensorT<Scalar> &t, int mode)
{
  if (mode < 1 || mode > t.rank()) {
    throw std::invalid_argument("mode " + std::to_string(mode) + " out of range for tensor " +
                                shape_string(t.shape()));
  }
  ModeSplit s{1, t.shape()[mode - 1], 1};
  for (int m = 0; m < mode - 1; ++m) {
    s.inner *= t.shape()[m];
  }
  for (Index m = mode; m < t.rank(); ++m) {
    s.outer *= t.shape()[m];
  }
  return s;
}

} // namespace detail

// Mode-i unfolding: rows = extent of `mode`, columns enumerate the remaining
// indices with lower-numbered modes varying fastest.
template <typename Scalar>
MatrixX<Scalar> unfold(const TensorT<Scalar> &t, int mode)
{
  const auto s = detail::mode_split(t, mode);
  MatrixX<Scalar> out(s.mid, s.inner * s.outer);
  const Scalar *src = t.data();
  for (Index b = 0; b < s.outer; ++b) {
    for (Index j = 0; j < s.mid; ++j) {
      const Scalar *col = src + s.inner * (j + s.mid * b);
      for (Index a = 0; a < s.inner; ++a) {
        out(j, a + s.inner * b) = col[a];
      }
    }
  }
  return out;
}

// Exact inverse of unfold for the given mode and target shape.
template <typename Scalar>
TensorT<Scalar> fold(const MatrixX<Scalar> &m, int mode, const Shape &shape)
{
  TensorT<Scalar> t(shape);
  const auto s = detail::mode_split(t, mode);
  if (m.rows() != s.mid || m.cols() != s.inner * s.outer) {
    throw std::invalid_argument("fold: matrix " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + " inconsistent with shape " +
                                shape_string(shape) + " at mode " + std::to_string(mode));
  }
  Scalar *dst = t.data();
  for (Index b = 0; b < s.outer; ++b) {
    for (Index j = 0; j < s.mid; ++j) {
      Scalar *col = dst + s.inner * (j + s.mid * b);
      for (Index a = 0; a < s.inner; ++a) {
        col[a] = m(j, a + s.inner * b);
      }
    }
  }
  return t;
}

// t x_mode a with a of size (new extent x old extent). Equivalent to
// fold(a * unfold(t, mode), mode, new shape) but runs as slab GEMMs without
// materializing the unfolding.
template <typename Scalar>
TensorT<Scalar> mode_product(const TensorT<Scalar> &t, const MatrixX<Scalar> &a, int mode)
{
  const auto s = detail::mode_split(t, mode);
  if (a.cols() != s.mid) {
    throw std::invalid_argument("mode_product: factor has " + std::to_string(a.cols()) +
                                " columns, tensor extent along mode " + std::to_string(mode) +
                                " is " + std::to_string(s.mid));
  }
  Shape out_shape = t.shape();
  out_shape[mode - 1] = a.rows();
  TensorT<Scalar> out(out_shape);
  const Index rows = a.rows();

  using Mat = MatrixX<Scalar>;
  using CMap = Eigen::Map<const Mat>;
  using Map = Eigen::Map<Mat>;
  if (s.inner == 1) {
    // Mode 1: the tensor is already the mode-1 unfolding.
    CMap in(t.data(), s.mid, s.outer);
    Map o(out.data(), rows, s.outer);
    o.noalias() = a * in;
  } else {
    for (Index b = 0; b < s.outer; ++b) {
      CMap in(t.data() + s.inner * s.mid * b, s.inner, s.mid);
      Map o(out.data() + s.inner * rows * b, s.inner, rows);
      o.noalias() = in * a.transpose();
    }
  }
  return out;
}

// Core multiplied by one factor matrix per mode, in ascending mode order.
template <typename Scalar>
TensorT<Scalar> tucker_reconstruct(const TensorT<Scalar> &core,
                                   const std::vector<MatrixX<Scalar>> &factors)
{
  if (static_cast<Index>(factors.size()) != core.rank()) {
    throw std::invalid_argument("tucker_reconstruct: " + std::to_string(factors.size()) +
                                " factors for a rank-" + std::to_string(core.rank()) + " core");
  }
  for (Index i = 0; i < core.rank(); ++i) {
    if (factors[i].cols() != core.shape()[i]) {
      throw std::invalid_argument("tucker_reconstruct: factor " + std::to_string(i + 1) + " has " +
                                  std::to_string(factors[i].cols()) + " columns, core extent is " +
                                  std::to_string(core.shape()[i]));
    }
  }
  TensorT<Scalar> t = core;
  for (Index i = 0; i < core.rank(); ++i) {
    t = mode_product(t, factors[i], static_cast<int>(i) + 1);
  }
  return t;
}

} // namespace tenf
