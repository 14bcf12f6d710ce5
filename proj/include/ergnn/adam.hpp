#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ergnn/matrix.hpp"

namespace ergnn {

struct AdamHyper {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled: each step also scales the parameter by (1 - lr * weight_decay).
  double weight_decay = 0.0;
};

/// Bias-corrected Adam with per-parameter hyperparameters (so filter
/// coefficients and dense weights can use different rates).
class Adam {
 public:
  Adam() = default;
  void add_param(std::size_t rows, std::size_t cols, AdamHyper hyper);

  /// params[i] -= update(grads[i]); shapes must match the registered slots.
  void step(std::span<Matrix* const> params, std::span<const Matrix* const> grads);

  std::size_t steps() const noexcept { return t_; }
  std::size_t num_params() const noexcept { return slots_.size(); }
  const Matrix& first_moment(std::size_t i) const { return slots_[i].m; }
  const Matrix& second_moment(std::size_t i) const { return slots_[i].v; }
  AdamHyper& hyper(std::size_t i) { return slots_[i].hyper; }

 private:
  struct Slot {
    Matrix m;
    Matrix v;
    AdamHyper hyper;
  };
  std::vector<Slot> slots_;
  std::size_t t_ = 0;
};

}  // namespace ergnn
