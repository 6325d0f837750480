#pragma once

#include <span>
#include <vector>

#include "lightk/autodiff.hpp"

namespace lightk {

/// Adam with bias correction. State is allocated on the first step and tied
/// to the order of the parameter list.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one update from each parameter's `grad`. Parameters without a
  /// gradient are treated as having a zero gradient.
  void step(std::span<Parameter* const> params);

  int steps() const noexcept { return t_; }
  double lr() const noexcept { return lr_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace lightk
