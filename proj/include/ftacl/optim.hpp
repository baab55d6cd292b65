#pragma once

#include <vector>

#include "ftacl/tensor.hpp"

namespace ftacl {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias correction over a fixed parameter list. Moment
/// buffers are keyed by position, so the parameter list must not change
/// between steps.
class Adam {
 public:
  Adam(std::vector<TensorPtr> params, AdamConfig cfg = {});

  /// One update from the parameters' current grad buffers.
  void step();
  void zero_grad();

  std::size_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig cfg_;
  std::size_t step_count_ = 0;
};

}  // namespace ftacl
