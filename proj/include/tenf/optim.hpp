#pragma once

#include <string>
#include <vector>

#include "tenf/tensor.hpp"

namespace tenf {

// Step decay: lr(step) = base_lr * decay_factor^floor(step / decay_every).
struct LrSchedule {
  double base_lr = 1e-4;
  double decay_factor = 0.2;
  long decay_every = 500;
};

double lr_at(const LrSchedule &schedule, long step);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

struct ParamRef {
  std::string name;
  Tensor *value = nullptr;
  bool weight_decay = false; // whether the decay term applies to this tensor
};

// Standard Adam with bias correction. With decoupled decay (the default) the
// shrink p <- p - lr*wd*p is applied before the Adam increment; the coupled
// variant adds wd*p to the gradient instead. A null grads entry counts as a
// zero gradient. Non-finite gradients raise TrainingError with the parameter
// name.
void adam_step(const std::vector<ParamRef> &params, const std::vector<const Tensor *> &grads,
               AdamState &state, double lr, double weight_decay, bool coupled_decay = false);

} // namespace tenf
