#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tenf/rng.hpp"
#include "tenf/tensor.hpp"

// Reverse-mode automatic differentiation over a fixed op vocabulary. Graphs
// are built define-by-run on a Tape: values are computed eagerly at node
// creation, backward() walks the tape in reverse creation order, which makes
// gradient accumulation deterministic. Complex data is carried as a trailing
// real/imag channel mode; the engine itself only ever sees real scalars.

namespace tenf::ad {

enum class Op {
  Leaf,
  Linear,
  Sine,
  Add,
  Scale,
  Mul,
  ModeProduct,
  Gather,
  ScatterAdd,
  Fft2c,
  Ifft2c,
  AbsDiffSum,
  Magnitude,
  NuclearNorm,
  CasoratiNuclearNorm,
  FrobeniusSq,
  Sum,
};

using IndexMapPtr = std::shared_ptr<const std::vector<Index>>;

struct Node {
  Op op = Op::Leaf;
  std::vector<Node *> inputs;
  Tensor value;
  Tensor grad; // empty until backward touches this node
  bool requires_grad = false;
  Index tape_index = -1;

  double k = 0.0; // Scale factor / Sine frequency
  int mode = 0;   // ModeProduct mode / AbsDiffSum difference mode
  IndexMapPtr map;
  Tensor cached; // NuclearNorm subgradient
  std::string name;

  double scalar() const { return value[0]; }
};

class Tape {
public:
  Node *leaf(Tensor value, bool requires_grad = false, std::string name = {});

  // x: (n, in), w: (out, in), b: (out). Value is x w^T with b added per row.
  Node *linear(Node *x, Node *w, Node *b);
  // sin(freq * x), elementwise.
  Node *sine(Node *x, double freq);
  Node *add(Node *a, Node *b);
  Node *scale(Node *x, double factor);
  Node *mul(Node *a, Node *b);
  // t x_mode u with u a 2-mode (rows, cols) tensor; differentiable in both.
  Node *mode_product(Node *t, Node *u, int mode);
  // out[j] = x[map[j]]; gradient is scatter_add with the same map.
  Node *gather(Node *x, IndexMapPtr map, Shape out_shape);
  // out[map[j]] += x[j]; gradient is gather with the same map.
  Node *scatter_add(Node *x, IndexMapPtr map, Shape out_shape);
  Node *fft2c(Node *x);
  Node *ifft2c(Node *x);
  // Sum of |forward differences| along `mode`, reduced to a scalar.
  Node *abs_diff_sum(Node *x, int mode);
  // Channel-pair magnitude: (..., 2) -> (...).
  Node *magnitude(Node *x);
  // Sum of singular values of a 2-mode real tensor; backward uses the
  // U V^T subgradient, treated as constant.
  Node *nuclear_norm(Node *x);
  // Nuclear norm of the complex Casorati matrix of an (nx, ny, nt, 2)
  // series; the complex U V^H subgradient is mapped back to channels.
  Node *casorati_nuclear_norm(Node *x);
  Node *frobenius_sq(Node *x);
  Node *sum(Node *x);

  // Populates grad on every node reachable from `loss` that requires one.
  // Resets all gradients first, so repeated calls are bit-identical.
  void backward(Node *loss);

  void clear();
  size_t size() const { return nodes_.size(); }

private:
  Node *push(std::unique_ptr<Node> node);
  std::vector<std::unique_ptr<Node>> nodes_;
};

// Finite-difference gradient checking. `build` reconstructs the loss from
// the current contents of `params` (typically by copying them into leaves)
// and returns the loss node plus the leaf node bound to each parameter, in
// the same order.
struct BoundLoss {
  Node *loss = nullptr;
  std::vector<Node *> params;
};

// Central differences with the given step on a random subsample of
// coordinates per parameter; returns the maximum relative error.
double check_gradients(const std::function<BoundLoss(Tape &)> &build,
                       const std::vector<Tensor *> &params, double step, int samples_per_param,
                       Rng &rng);

} // namespace tenf::ad
