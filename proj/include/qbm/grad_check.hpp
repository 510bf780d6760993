#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "qbm/tensor.hpp"

namespace qbm {

// Central finite-difference verification of reverse-mode gradients, run in
// 64-bit mode. `forward` must rebuild the scalar output from the current leaf
// values on the given tape each time it is called.
//
// Returns the maximum over all leaf elements of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline double grad_check(
    const std::function<Tensor<double>(Tape<double>&)>& forward,
    const std::vector<Tensor<double>>& leaves, double step = 1e-4) {
  for (Tensor<double> leaf : leaves) leaf.zero_grad();
  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    Tensor<double> loss = forward(tape);
    tape.backward(loss);
    for (const auto& leaf : leaves) {
      analytic.emplace_back(leaf.grad(), leaf.grad() + leaf.numel());
    }
  }
  auto eval = [&]() {
    Tape<double> tape;
    return forward(tape).data()[0];
  };
  double max_rel = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor<double> leaf = leaves[li];
    for (size_t i = 0; i < leaf.numel(); ++i) {
      const double keep = leaf.data()[i];
      leaf.data()[i] = keep + step;
      const double up = eval();
      leaf.data()[i] = keep - step;
      const double down = eval();
      leaf.data()[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[li][i];
      const double rel =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace qbm
