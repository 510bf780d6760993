#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qbm/error.hpp"
#include "qbm/tensor.hpp"

namespace qbm {

// Adam optimizer state: one first/second moment buffer per parameter tensor,
// aligned by position with the parameter list it was initialized from.
template <class R>
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<std::vector<R>> m;
  std::vector<std::vector<R>> v;

  static AdamState init(const std::vector<Tensor<R>>& params, double lr = 1e-4) {
    AdamState s;
    s.lr = lr;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
      s.m.emplace_back(p.numel(), R(0));
      s.v.emplace_back(p.numel(), R(0));
    }
    return s;
  }
};

// One Adam update with bias correction, reading each parameter's accumulated
// gradient. Deterministic given (params, grads, state).
template <class R>
void adam_step(std::vector<Tensor<R>>& params, AdamState<R>& state) {
  if (params.size() != state.m.size()) {
    throw ShapeError("adam_step: optimizer tracks " +
                     std::to_string(state.m.size()) + " tensors, got " +
                     std::to_string(params.size()));
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (p.numel() != state.m[pi].size()) {
      throw ShapeError("adam_step: parameter " + std::to_string(pi) +
                       " has " + std::to_string(p.numel()) +
                       " elements, state has " +
                       std::to_string(state.m[pi].size()));
    }
    const R* g = p.grad();
    R* x = p.data();
    R* m = state.m[pi].data();
    R* v = state.v[pi].data();
    for (size_t i = 0; i < p.numel(); ++i) {
      m[i] = R(state.beta1) * m[i] + R(1.0 - state.beta1) * g[i];
      v[i] = R(state.beta2) * v[i] + R(1.0 - state.beta2) * g[i] * g[i];
      const double mhat = double(m[i]) / bc1;
      const double vhat = double(v[i]) / bc2;
      x[i] -= R(state.lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

}  // namespace qbm
