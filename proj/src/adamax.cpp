#include <algorithm>
#include <cmath>

#include "scml/harness.hpp"

namespace scml {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

void adamax_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr, AdamaxState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adamax_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ShapeError("adamax_step: parameter " + std::to_string(i) + " shape " + shape_str(params[i]->shape()) +
                       " vs gradient " + shape_str(grads[i].shape()));
    }
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.push_back(Tensor::zeros_like(*p));
      state.u.push_back(Tensor::zeros_like(*p));
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adamax_step: optimizer state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  ++state.step;
  const double step_size = lr / (1.0 - std::pow(kBeta1, static_cast<double>(state.step)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& u = state.u[i];
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      u[j] = std::max(kBeta2 * u[j], std::abs(g[j]) + kEps);
      p[j] -= step_size * m[j] / u[j];
    }
  }
}

void adamax_step(ModelParams& params, std::span<const Tensor> grads, double lr, AdamaxState& state) {
  std::vector<Tensor*> ptrs;
  for (auto& [name, t] : params.named()) ptrs.push_back(t);
  adamax_step(ptrs, grads, lr, state);
}

}  // namespace scml
