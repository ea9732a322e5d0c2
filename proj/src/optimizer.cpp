#include <cmath>

#include "probation/kernels.hpp"
#include "probation/model.hpp"

namespace probation {

OptimizerState make_optimizer(std::span<const ConstNamedTensor> params, double learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  OptimizerState s;
  s.learning_rate = learning_rate;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor->rows, p.tensor->cols);
    s.v.emplace_back(p.tensor->rows, p.tensor->cols);
  }
  return s;
}

void adam_step(std::span<const NamedTensor> params, std::span<const ConstNamedTensor> grads,
               OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].tensor->same_shape(*grads[i].tensor) ||
        !params[i].tensor->same_shape(state.m[i]) || !params[i].tensor->same_shape(state.v[i])) {
      throw std::invalid_argument("adam_step: shape mismatch for " + params[i].name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    k.adam(p.data.data(), grads[i].tensor->data.data(), state.m[i].data.data(),
           state.v[i].data.data(), p.size(), state.learning_rate, state.beta1, state.beta2,
           state.epsilon, bc1, bc2);
  }
}

}  // namespace probation
