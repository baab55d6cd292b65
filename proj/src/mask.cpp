#include "ftacl/mask.hpp"

namespace ftacl {

AttentionMask build_gsa_mask(std::size_t seq_len) {
  AttentionMask m;
  m.n = seq_len;
  m.allow.assign(seq_len * seq_len, 1);
  return m;
}

AttentionMask build_fta_mask(const TokenGrid& grid) {
  const std::size_t n = grid.seq_len();
  AttentionMask mask;
  mask.n = n;
  mask.allow.assign(n * n, 0);
  // class token row and column
  for (std::size_t j = 0; j < n; ++j) {
    mask.allow[j] = 1;          // class attends to all
    mask.allow[j * n] = 1;      // all attend to class
  }
  // patch token (m, t) lives at index 1 + m*T + t
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mi = (i - 1) / grid.t;
    const std::size_t ti = (i - 1) % grid.t;
    for (std::size_t j = 1; j < n; ++j) {
      const std::size_t mj = (j - 1) / grid.t;
      const std::size_t tj = (j - 1) % grid.t;
      if (mi == mj || ti == tj) mask.allow[i * n + j] = 1;
    }
  }
  return mask;
}

}  // namespace ftacl
