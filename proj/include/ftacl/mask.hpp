#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ftacl/grid.hpp"

namespace ftacl {

/// Boolean n x n allow-matrix for attention. allow[i*n+j] == 1 means query
/// token i may attend to key token j. Index 0 is the class token.
struct AttentionMask {
  std::size_t n = 0;
  std::vector<std::uint8_t> allow;

  bool at(std::size_t i, std::size_t j) const { return allow[i * n + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { allow[i * n + j] = v ? 1 : 0; }

  std::size_t nnz() const {
    std::size_t c = 0;
    for (std::uint8_t v : allow) c += v;
    return c;
  }
};

AttentionMask build_gsa_mask(std::size_t seq_len);

/// Frequency-time factorized connectivity: a patch token attends to patch
/// tokens sharing its frequency row or time column plus the class token; the
/// class token attends to everything. nnz = MT(M+T+1)+1.
AttentionMask build_fta_mask(const TokenGrid& grid);

enum class AttentionMode { GSA, FTA };

inline AttentionMask build_mask(AttentionMode mode, const TokenGrid& grid) {
  return mode == AttentionMode::GSA ? build_gsa_mask(grid.seq_len()) : build_fta_mask(grid);
}

}  // namespace ftacl
