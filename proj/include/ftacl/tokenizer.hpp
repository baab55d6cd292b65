#pragma once

#include <random>

#include "ftacl/audio.hpp"
#include "ftacl/grid.hpp"
#include "ftacl/ops.hpp"

namespace ftacl {

/// Learnable tokenizer state: strided conv patch embed, class token and
/// position embeddings for a reference grid.
struct TokenizerWeights {
  TensorPtr patch_kernel;  // [d, in_ch, K, K]
  TensorPtr patch_bias;    // [d]
  TensorPtr cls_token;     // [1, d]
  TensorPtr pos_embed;     // [M0*T0+1, d]
  TokenGrid pos_grid;      // grid the stored pos_embed was laid out for
};

/// Token sequence Z with its grid; row 0 is the class token, patch (m, t)
/// lives at row 1 + m*T + t.
struct TokenSequence {
  TensorPtr z;  // [MT+1, d]
  TokenGrid grid;
};

TokenizerWeights init_tokenizer(const TokenizerConfig& cfg, const TokenGrid& pos_grid,
                                std::mt19937_64& rng);

/// Bilinear resample of position embeddings between grids (align-corners).
/// The class-token row is copied unchanged; identical grids return the input
/// tensor itself.
TensorPtr resize_pos_embed(const TensorPtr& pe, const TokenGrid& from, const TokenGrid& to);

/// Spectrogram -> token sequence: strided conv, flatten, prepend class token,
/// add (resized) position embeddings.
TokenSequence patchify(const Spectrogram& spec, const TokenizerWeights& w,
                       const TokenizerConfig& cfg);

}  // namespace ftacl
