#include "tenf/optim.hpp"

#include <cmath>

#include "tenf/errors.hpp"

namespace tenf {

double lr_at(const LrSchedule &schedule, long step)
{
  if (step < 0) {
    throw std::invalid_argument("lr_at: negative step");
  }
  const auto k = static_cast<double>(step / schedule.decay_every);
  // When the reciprocal of the decay factor is integral (0.2 -> 5), divide
  // by its power instead: one correctly-rounded division keeps the schedule
  // on the decimal grid (1e-4 -> 2e-5 -> 4e-6 exactly).
  const double inv = 1.0 / schedule.decay_factor;
  if (inv == std::round(inv)) {
    return schedule.base_lr / std::pow(inv, k);
  }
  return schedule.base_lr * std::pow(schedule.decay_factor, k);
}

void adam_step(const std::vector<ParamRef> &params, const std::vector<const Tensor *> &grads,
               AdamState &state, double lr, double weight_decay, bool coupled_decay)
{
  if (lr <= 0.0) {
    throw std::invalid_argument("adam_step: learning rate must be positive");
  }
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  }
  if (state.m.empty()) {
    for (const ParamRef &p : params) {
      state.m.emplace_back(p.value->shape());
      state.v.emplace_back(p.value->shape());
    }
  }

  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor &p = *params[i].value;
    Tensor &m = state.m[i];
    Tensor &v = state.v[i];
    if (!p.same_shape(m)) {
      throw std::invalid_argument("adam_step: state shape mismatch for '" + params[i].name + "'");
    }
    const Tensor *g = grads[i];
    const bool decay_here = params[i].weight_decay && weight_decay != 0.0;
    for (Index j = 0; j < p.size(); ++j) {
      double gj = g ? (*g)[j] : 0.0;
      if (!std::isfinite(gj)) {
        throw TrainingError(params[i].name, "non-finite gradient at element " + std::to_string(j));
      }
      if (decay_here) {
        if (coupled_decay) {
          gj += weight_decay * p[j];
        } else {
          p[j] -= lr * weight_decay * p[j];
        }
      }
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double mhat = m[j] / bias1;
      const double vhat = v[j] / bias2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

} // namespace tenf
