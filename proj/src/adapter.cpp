#include "ftacl/adapter.hpp"

#include <cmath>

namespace ftacl {

ConvAdapter init_adapter(const AdapterConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t d = cfg.d, db = cfg.d_bottleneck;
  ConvAdapter a;
  a.w_down = make_tensor({d, db}, true);
  a.b_down = make_tensor({db}, true);
  a.kernel = make_tensor({db, db, 3, 3}, true);
  a.b_conv = make_tensor({db}, true);
  a.w_up = make_tensor({db, d}, true);  // zero init: adapter starts as identity branch
  a.b_up = make_tensor({d}, true);

  std::normal_distribution<double> down_dist(0.0, 0.02);
  for (double& v : a.w_down->data) v = down_dist(rng);
  // Kaiming-style for the 3x3 conv: std = sqrt(2 / fan_in)
  std::normal_distribution<double> conv_dist(0.0, std::sqrt(2.0 / (9.0 * db)));
  for (double& v : a.kernel->data) v = conv_dist(rng);
  return a;
}

TensorPtr adapter_forward(const TensorPtr& z, const ConvAdapter& a, const TokenGrid& grid) {
  if (z->rank() != 2 || z->rows() != grid.seq_len()) {
    throw TensorError("adapter_forward: token count " + std::to_string(z->rows()) +
                      " does not match grid " + std::to_string(grid.seq_len()));
  }
  auto hidden = add_rowvec(matmul(z, a.w_down), a.b_down);  // [MT+1, d']
  auto cls = slice_rows(hidden, 0, 1);
  auto patches = slice_rows(hidden, 1, hidden->rows());
  auto spatial = tokens_to_chw(patches, grid);
  auto conved = conv2d(spatial, a.kernel, a.b_conv, 1, 1);
  auto flat = chw_to_tokens(conved);
  auto joined = gelu(concat_rows(cls, flat));  // class token bypasses the conv
  return add_rowvec(matmul(joined, a.w_up), a.b_up);
}

std::uint64_t adapter_param_count(const AdapterConfig& cfg) {
  cfg.validate();
  const std::uint64_t d = cfg.d, db = cfg.d_bottleneck;
  return d * db + db + 9 * db * db + db + db * d + d;
}

std::uint64_t adapter_param_count(const AdapterConfig& cfg, std::size_t layers) {
  return 2ull * layers * adapter_param_count(cfg);
}

}  // namespace ftacl
