#include "tenf/autodiff.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "tenf/errors.hpp"
#include "tenf/fft.hpp"

namespace tenf::ad {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using MapM = Eigen::Map<MatrixXd>;
using CMapM = Eigen::Map<const MatrixXd>;

void ensure_grad(Node *n)
{
  if (n->grad.empty()) {
    n->grad = Tensor(n->value.shape());
  }
}

void require_same_shape(const Node *a, const Node *b, const char *what)
{
  if (a->value.shape() != b->value.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_string(a->value.shape()) + " vs " +
                                shape_string(b->value.shape()));
  }
}

bool all_finite(const Tensor &t)
{
  for (Index i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      return false;
    }
  }
  return true;
}

// Complex Casorati matrix view of an (nx, ny, nt, 2) series: the channel
// halves of the buffer are exactly the real and imaginary (nx*ny, nt)
// matrices in column-major order.
MatrixXcd casorati_matrix(const Tensor &x)
{
  const Index rows = x.shape()[0] * x.shape()[1];
  const Index nt = x.shape()[2];
  const Index half = x.size() / 2;
  MatrixXcd m(rows, nt);
  m.real() = CMapM(x.data(), rows, nt);
  m.imag() = CMapM(x.data() + half, rows, nt);
  return m;
}

} // namespace

Node *Tape::push(std::unique_ptr<Node> node)
{
  node->tape_index = static_cast<Index>(nodes_.size());
  for (const Node *in : node->inputs) {
    // Inputs always precede their consumers on the tape; a cycle cannot be
    // expressed through this API.
    if (in->tape_index < 0 || in->tape_index >= node->tape_index) {
      throw Error("autodiff: input node does not precede its consumer");
    }
    node->requires_grad = node->requires_grad || in->requires_grad;
  }
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

Node *Tape::leaf(Tensor value, bool requires_grad, std::string name)
{
  auto n = std::make_unique<Node>();
  n->op = Op::Leaf;
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->name = std::move(name);
  return push(std::move(n));
}

Node *Tape::linear(Node *x, Node *w, Node *b)
{
  if (x->value.rank() != 2 || w->value.rank() != 2 || b->value.rank() != 1 ||
      x->value.shape()[1] != w->value.shape()[1] || w->value.shape()[0] != b->value.shape()[0]) {
    throw std::invalid_argument("linear: inconsistent shapes x" + shape_string(x->value.shape()) +
                                " w" + shape_string(w->value.shape()) + " b" +
                                shape_string(b->value.shape()));
  }
  const Index n = x->value.shape()[0];
  const Index out = w->value.shape()[0];
  auto node = std::make_unique<Node>();
  node->op = Op::Linear;
  node->inputs = {x, w, b};
  node->value = Tensor({n, out});
  CMapM xm(x->value.data(), n, x->value.shape()[1]);
  CMapM wm(w->value.data(), out, w->value.shape()[1]);
  MapM vm(node->value.data(), n, out);
  vm.noalias() = xm * wm.transpose();
  vm.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b->value.data(), out);
  return push(std::move(node));
}

Node *Tape::sine(Node *x, double freq)
{
  auto node = std::make_unique<Node>();
  node->op = Op::Sine;
  node->inputs = {x};
  node->k = freq;
  node->value = Tensor(x->value.shape());
  for (Index i = 0; i < x->value.size(); ++i) {
    node->value[i] = std::sin(freq * x->value[i]);
  }
  return push(std::move(node));
}

Node *Tape::add(Node *a, Node *b)
{
  require_same_shape(a, b, "add");
  auto node = std::make_unique<Node>();
  node->op = Op::Add;
  node->inputs = {a, b};
  node->value = Tensor(a->value.shape());
  for (Index i = 0; i < node->value.size(); ++i) {
    node->value[i] = a->value[i] + b->value[i];
  }
  return push(std::move(node));
}

Node *Tape::scale(Node *x, double factor)
{
  auto node = std::make_unique<Node>();
  node->op = Op::Scale;
  node->inputs = {x};
  node->k = factor;
  node->value = Tensor(x->value.shape());
  for (Index i = 0; i < node->value.size(); ++i) {
    node->value[i] = factor * x->value[i];
  }
  return push(std::move(node));
}

Node *Tape::mul(Node *a, Node *b)
{
  require_same_shape(a, b, "mul");
  auto node = std::make_unique<Node>();
  node->op = Op::Mul;
  node->inputs = {a, b};
  node->value = Tensor(a->value.shape());
  for (Index i = 0; i < node->value.size(); ++i) {
    node->value[i] = a->value[i] * b->value[i];
  }
  return push(std::move(node));
}

Node *Tape::mode_product(Node *t, Node *u, int mode)
{
  if (u->value.rank() != 2) {
    throw std::invalid_argument("mode_product: factor must be 2-mode, got " +
                                shape_string(u->value.shape()));
  }
  CMapM um(u->value.data(), u->value.shape()[0], u->value.shape()[1]);
  auto node = std::make_unique<Node>();
  node->op = Op::ModeProduct;
  node->inputs = {t, u};
  node->mode = mode;
  node->value = tenf::mode_product(t->value, MatrixXd(um), mode);
  return push(std::move(node));
}

Node *Tape::gather(Node *x, IndexMapPtr map, Shape out_shape)
{
  const Index out_size = shape_product(out_shape);
  if (static_cast<Index>(map->size()) != out_size) {
    throw std::invalid_argument("gather: index map has " + std::to_string(map->size()) +
                                " entries for output " + shape_string(out_shape));
  }
  const Index in_size = x->value.size();
  for (Index idx : *map) {
    if (idx < 0 || idx >= in_size) {
      throw std::invalid_argument("gather: index " + std::to_string(idx) +
                                  " out of bounds for input of size " + std::to_string(in_size));
    }
  }
  auto node = std::make_unique<Node>();
  node->op = Op::Gather;
  node->inputs = {x};
  node->map = std::move(map);
  node->value = Tensor(std::move(out_shape));
  const auto &m = *node->map;
  for (Index j = 0; j < out_size; ++j) {
    node->value[j] = x->value[m[j]];
  }
  return push(std::move(node));
}

Node *Tape::scatter_add(Node *x, IndexMapPtr map, Shape out_shape)
{
  if (static_cast<Index>(map->size()) != x->value.size()) {
    throw std::invalid_argument("scatter_add: index map has " + std::to_string(map->size()) +
                                " entries for input of size " + std::to_string(x->value.size()));
  }
  const Index out_size = shape_product(out_shape);
  for (Index idx : *map) {
    if (idx < 0 || idx >= out_size) {
      throw std::invalid_argument("scatter_add: index " + std::to_string(idx) +
                                  " out of bounds for output of size " + std::to_string(out_size));
    }
  }
  auto node = std::make_unique<Node>();
  node->op = Op::ScatterAdd;
  node->inputs = {x};
  node->map = std::move(map);
  node->value = Tensor(std::move(out_shape));
  const auto &m = *node->map;
  for (Index j = 0; j < x->value.size(); ++j) {
    node->value[m[j]] += x->value[j];
  }
  return push(std::move(node));
}

Node *Tape::fft2c(Node *x)
{
  auto node = std::make_unique<Node>();
  node->op = Op::Fft2c;
  node->inputs = {x};
  node->value = fftc::fft2c(x->value);
  return push(std::move(node));
}

Node *Tape::ifft2c(Node *x)
{
  auto node = std::make_unique<Node>();
  node->op = Op::Ifft2c;
  node->inputs = {x};
  node->value = fftc::ifft2c(x->value);
  return push(std::move(node));
}

Node *Tape::abs_diff_sum(Node *x, int mode)
{
  const auto s = detail::mode_split(x->value, mode);
  auto node = std::make_unique<Node>();
  node->op = Op::AbsDiffSum;
  node->inputs = {x};
  node->mode = mode;
  node->value = Tensor({1});
  double acc = 0.0;
  const double *src = x->value.data();
  for (Index b = 0; b < s.outer; ++b) {
    for (Index j = 0; j + 1 < s.mid; ++j) {
      const double *lo = src + s.inner * (j + s.mid * b);
      const double *hi = lo + s.inner;
      for (Index a = 0; a < s.inner; ++a) {
        acc += std::abs(hi[a] - lo[a]);
      }
    }
  }
  node->value[0] = acc;
  return push(std::move(node));
}

Node *Tape::magnitude(Node *x)
{
  if (x->value.rank() < 2 || x->value.shape().back() != 2) {
    throw std::invalid_argument("magnitude: expected a (..., 2) channel-pair tensor, got " +
                                shape_string(x->value.shape()));
  }
  Shape out_shape(x->value.shape().begin(), x->value.shape().end() - 1);
  auto node = std::make_unique<Node>();
  node->op = Op::Magnitude;
  node->inputs = {x};
  node->value = Tensor(std::move(out_shape));
  const Index half = x->value.size() / 2;
  for (Index i = 0; i < half; ++i) {
    node->value[i] = std::hypot(x->value[i], x->value[half + i]);
  }
  return push(std::move(node));
}

Node *Tape::nuclear_norm(Node *x)
{
  if (x->value.rank() != 2) {
    throw std::invalid_argument("nuclear_norm: expected a 2-mode tensor, got " +
                                shape_string(x->value.shape()));
  }
  if (!all_finite(x->value)) {
    throw NumericalError("nuclear_norm: non-finite input matrix");
  }
  const Index rows = x->value.shape()[0];
  const Index cols = x->value.shape()[1];
  CMapM m(x->value.data(), rows, cols);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto &sv = svd.singularValues();
  if (!sv.allFinite()) {
    throw NumericalError("nuclear_norm: SVD failed, sigma_max=" + std::to_string(sv.maxCoeff()) +
                         " sigma_min=" + std::to_string(sv.minCoeff()));
  }
  auto node = std::make_unique<Node>();
  node->op = Op::NuclearNorm;
  node->inputs = {x};
  node->value = Tensor({1});
  node->value[0] = sv.sum();
  node->cached = Tensor({rows, cols});
  MapM(node->cached.data(), rows, cols).noalias() = svd.matrixU() * svd.matrixV().transpose();
  return push(std::move(node));
}

Node *Tape::casorati_nuclear_norm(Node *x)
{
  if (x->value.rank() != 4 || x->value.shape()[3] != 2) {
    throw std::invalid_argument("casorati_nuclear_norm: expected (nx, ny, nt, 2), got " +
                                shape_string(x->value.shape()));
  }
  if (!all_finite(x->value)) {
    throw NumericalError("casorati_nuclear_norm: non-finite input");
  }
  const MatrixXcd m = casorati_matrix(x->value);
  Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto &sv = svd.singularValues();
  if (!sv.allFinite()) {
    throw NumericalError("casorati_nuclear_norm: SVD failed, sigma_max=" +
                         std::to_string(sv.maxCoeff()) +
                         " sigma_min=" + std::to_string(sv.minCoeff()));
  }
  auto node = std::make_unique<Node>();
  node->op = Op::CasoratiNuclearNorm;
  node->inputs = {x};
  node->value = Tensor({1});
  node->value[0] = sv.sum();
  const MatrixXcd g = svd.matrixU() * svd.matrixV().adjoint();
  node->cached = Tensor(x->value.shape());
  const Index half = node->cached.size() / 2;
  MapM(node->cached.data(), half, 1) = g.real().reshaped(half, 1);
  MapM(node->cached.data() + half, half, 1) = g.imag().reshaped(half, 1);
  return push(std::move(node));
}

Node *Tape::frobenius_sq(Node *x)
{
  auto node = std::make_unique<Node>();
  node->op = Op::FrobeniusSq;
  node->inputs = {x};
  node->value = Tensor({1});
  double acc = 0.0;
  for (Index i = 0; i < x->value.size(); ++i) {
    acc += x->value[i] * x->value[i];
  }
  node->value[0] = acc;
  return push(std::move(node));
}

Node *Tape::sum(Node *x)
{
  auto node = std::make_unique<Node>();
  node->op = Op::Sum;
  node->inputs = {x};
  node->value = Tensor({1});
  double acc = 0.0;
  for (Index i = 0; i < x->value.size(); ++i) {
    acc += x->value[i];
  }
  node->value[0] = acc;
  return push(std::move(node));
}

void Tape::backward(Node *loss)
{
  if (loss->value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_string(loss->value.shape()));
  }
  for (auto &n : nodes_) {
    n->grad = Tensor();
  }
  ensure_grad(loss);
  loss->grad[0] = 1.0;

  for (Index i = loss->tape_index; i >= 0; --i) {
    Node *n = nodes_[i].get();
    if (n->grad.empty() || !n->requires_grad) {
      continue;
    }
    const Tensor &g = n->grad;
    switch (n->op) {
    case Op::Leaf:
      break;
    case Op::Linear: {
      Node *x = n->inputs[0], *w = n->inputs[1], *b = n->inputs[2];
      const Index rows = x->value.shape()[0];
      const Index in = x->value.shape()[1];
      const Index out = w->value.shape()[0];
      CMapM gm(g.data(), rows, out);
      CMapM xm(x->value.data(), rows, in);
      CMapM wm(w->value.data(), out, in);
      if (x->requires_grad) {
        ensure_grad(x);
        MapM(x->grad.data(), rows, in).noalias() += gm * wm;
      }
      if (w->requires_grad) {
        ensure_grad(w);
        MapM(w->grad.data(), out, in).noalias() += gm.transpose() * xm;
      }
      if (b->requires_grad) {
        ensure_grad(b);
        Eigen::Map<Eigen::VectorXd>(b->grad.data(), out) += gm.colwise().sum().transpose();
      }
      break;
    }
    case Op::Sine: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        for (Index j = 0; j < g.size(); ++j) {
          x->grad[j] += g[j] * n->k * std::cos(n->k * x->value[j]);
        }
      }
      break;
    }
    case Op::Add:
      for (Node *in : n->inputs) {
        if (in->requires_grad) {
          ensure_grad(in);
          for (Index j = 0; j < g.size(); ++j) {
            in->grad[j] += g[j];
          }
        }
      }
      break;
    case Op::Scale: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        for (Index j = 0; j < g.size(); ++j) {
          x->grad[j] += n->k * g[j];
        }
      }
      break;
    }
    case Op::Mul: {
      Node *a = n->inputs[0], *b = n->inputs[1];
      if (a->requires_grad) {
        ensure_grad(a);
        for (Index j = 0; j < g.size(); ++j) {
          a->grad[j] += g[j] * b->value[j];
        }
      }
      if (b->requires_grad) {
        ensure_grad(b);
        for (Index j = 0; j < g.size(); ++j) {
          b->grad[j] += g[j] * a->value[j];
        }
      }
      break;
    }
    case Op::ModeProduct: {
      Node *t = n->inputs[0], *u = n->inputs[1];
      CMapM um(u->value.data(), u->value.shape()[0], u->value.shape()[1]);
      if (t->requires_grad) {
        ensure_grad(t);
        const Tensor gt = tenf::mode_product(g, MatrixXd(um.transpose()), n->mode);
        for (Index j = 0; j < gt.size(); ++j) {
          t->grad[j] += gt[j];
        }
      }
      if (u->requires_grad) {
        ensure_grad(u);
        const MatrixXd gu = unfold(g, n->mode) * unfold(t->value, n->mode).transpose();
        MapM(u->grad.data(), gu.rows(), gu.cols()) += gu;
      }
      break;
    }
    case Op::Gather: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const auto &m = *n->map;
        for (Index j = 0; j < g.size(); ++j) {
          x->grad[m[j]] += g[j];
        }
      }
      break;
    }
    case Op::ScatterAdd: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const auto &m = *n->map;
        for (Index j = 0; j < x->grad.size(); ++j) {
          x->grad[j] += g[m[j]];
        }
      }
      break;
    }
    case Op::Fft2c: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const Tensor gx = fftc::ifft2c(g); // adjoint of a unitary map is its inverse
        for (Index j = 0; j < gx.size(); ++j) {
          x->grad[j] += gx[j];
        }
      }
      break;
    }
    case Op::Ifft2c: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const Tensor gx = fftc::fft2c(g);
        for (Index j = 0; j < gx.size(); ++j) {
          x->grad[j] += gx[j];
        }
      }
      break;
    }
    case Op::AbsDiffSum: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const auto s = detail::mode_split(x->value, n->mode);
        const double go = g[0];
        const double *src = x->value.data();
        double *dst = x->grad.data();
        for (Index b = 0; b < s.outer; ++b) {
          for (Index j = 0; j + 1 < s.mid; ++j) {
            const Index lo = s.inner * (j + s.mid * b);
            const Index hi = lo + s.inner;
            for (Index a = 0; a < s.inner; ++a) {
              const double d = src[hi + a] - src[lo + a];
              const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
              dst[hi + a] += go * sg;
              dst[lo + a] -= go * sg;
            }
          }
        }
      }
      break;
    }
    case Op::Magnitude: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const Index half = x->value.size() / 2;
        for (Index j = 0; j < half; ++j) {
          const double mag = n->value[j];
          if (mag > 0.0) {
            x->grad[j] += g[j] * x->value[j] / mag;
            x->grad[half + j] += g[j] * x->value[half + j] / mag;
          }
        }
      }
      break;
    }
    case Op::NuclearNorm:
    case Op::CasoratiNuclearNorm: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const double go = g[0];
        for (Index j = 0; j < x->grad.size(); ++j) {
          x->grad[j] += go * n->cached[j];
        }
      }
      break;
    }
    case Op::FrobeniusSq: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const double go = g[0];
        for (Index j = 0; j < x->grad.size(); ++j) {
          x->grad[j] += 2.0 * go * x->value[j];
        }
      }
      break;
    }
    case Op::Sum: {
      Node *x = n->inputs[0];
      if (x->requires_grad) {
        ensure_grad(x);
        const double go = g[0];
        for (Index j = 0; j < x->grad.size(); ++j) {
          x->grad[j] += go;
        }
      }
      break;
    }
    }
  }
}

void Tape::clear() { nodes_.clear(); }

double check_gradients(const std::function<BoundLoss(Tape &)> &build,
                       const std::vector<Tensor *> &params, double step, int samples_per_param,
                       Rng &rng)
{
  Tape tape;
  BoundLoss bound = build(tape);
  tape.backward(bound.loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Node *p : bound.params) {
    analytic.push_back(p->grad.empty() ? Tensor(p->value.shape()) : p->grad);
  }

  // Coordinates where both sides sit below the finite-difference resolution
  // (~eps*|f|/step) carry no signal and are skipped; a broken gradient still
  // shows up because the difference quotient side stays large.
  const double floor_tol = 1e-5 * (1.0 + std::abs(bound.loss->scalar()));
  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor &p = *params[pi];
    const Index count = p.size();
    const int samples = std::min<Index>(samples_per_param, count);
    for (int s = 0; s < samples; ++s) {
      const Index j = (count == samples) ? s : static_cast<Index>(rng.below(count));
      const double saved = p[j];
      p[j] = saved + step;
      Tape plus;
      const double f_plus = build(plus).loss->scalar();
      p[j] = saved - step;
      Tape minus;
      const double f_minus = build(minus).loss->scalar();
      p[j] = saved;

      const double fd = (f_plus - f_minus) / (2.0 * step);
      const double an = analytic[pi][j];
      const double denom = std::max(std::abs(fd), std::abs(an));
      if (denom < floor_tol) {
        continue;
      }
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  }
  return max_rel;
}

} // namespace tenf::ad
