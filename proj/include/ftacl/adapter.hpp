#pragma once

#include <random>

#include "ftacl/ops.hpp"
#include "ftacl/tokenizer.hpp"

namespace ftacl {

struct AdapterConfig {
  std::size_t d = 768;
  std::size_t d_bottleneck = 64;

  void validate() const {
    if (d_bottleneck == 0 || d_bottleneck >= d) {
      throw std::invalid_argument("AdapterConfig: requires 0 < d' < d");
    }
  }
};

/// Task-specific bottleneck: down-projection, 3x3 same-padding conv over the
/// M x T token grid, GELU, up-projection. The class token skips the conv.
struct ConvAdapter {
  TensorPtr w_down;   // [d, d']
  TensorPtr b_down;   // [d']
  TensorPtr kernel;   // [d', d', 3, 3]
  TensorPtr b_conv;   // [d']
  TensorPtr w_up;     // [d', d]
  TensorPtr b_up;     // [d]

  std::vector<TensorPtr> params() const {
    return {w_down, b_down, kernel, b_conv, w_up, b_up};
  }
};

/// W_up starts at zero so a freshly added adapter is an exact no-op branch.
ConvAdapter init_adapter(const AdapterConfig& cfg, std::mt19937_64& rng);

TensorPtr adapter_forward(const TensorPtr& z, const ConvAdapter& a, const TokenGrid& grid);

/// Parameters of one adapter: d*d'+d' + 9*d'^2+d' + d'*d+d.
std::uint64_t adapter_param_count(const AdapterConfig& cfg);

/// Two adapters per encoder layer.
std::uint64_t adapter_param_count(const AdapterConfig& cfg, std::size_t layers);

}  // namespace ftacl
