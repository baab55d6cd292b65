#pragma once

#include <cstdint>
#include <vector>

#include "ftacl/mask.hpp"
#include "ftacl/tensor.hpp"

namespace ftacl {

// Elementwise / broadcast
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& bias);  // [n,d] + [d]
TensorPtr scale(const TensorPtr& x, double c);

// Linear algebra
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);     // [m,k]*[k,n]
TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b);  // [m,k]*[n,k]^T -> [m,n]

// Nonlinearities and normalization
TensorPtr gelu(const TensorPtr& x);  // exact erf form
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps);

/// Row-wise softmax restricted to the mask's allowed entries. Disallowed
/// entries are exactly 0 in the output and are never read, so perturbing a
/// masked logit cannot change the result. Throws TensorError on an all-masked
/// row ("degenerate attention row").
TensorPtr masked_softmax(const TensorPtr& logits, const AttentionMask& mask);

/// x: [c_in,h,w], kernel: [c_out,c_in,kh,kw], optional bias [c_out].
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias,
                 std::size_t stride, std::size_t padding);

/// Mean of -log softmax(logits)[label] over rows. logits: [n,C].
TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);

// Shape plumbing (pure index permutations / selections)
TensorPtr slice_rows(const TensorPtr& x, std::size_t r0, std::size_t r1);
TensorPtr slice_cols(const TensorPtr& x, std::size_t c0, std::size_t c1);
TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b);
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
TensorPtr tokens_to_chw(const TensorPtr& x, const TokenGrid& grid);  // [MT,c] -> [c,M,T]
TensorPtr chw_to_tokens(const TensorPtr& x);                         // [c,M,T] -> [MT,c]

}  // namespace ftacl
