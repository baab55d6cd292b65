#pragma once

#include <optional>

#include "ftacl/adapter.hpp"
#include "ftacl/mask.hpp"
#include "ftacl/tokenizer.hpp"

namespace ftacl {

struct EncoderConfig {
  std::size_t layers = 12;
  std::size_t embed_dim = 768;
  std::size_t heads = 12;
  std::size_t mlp_ratio = 4;
  AttentionMode attention_mode = AttentionMode::GSA;
  double ln_eps = 1e-6;

  void validate() const {
    if (layers < 1) throw std::invalid_argument("EncoderConfig: layers must be >= 1");
    if (heads < 1 || embed_dim % heads != 0) {
      throw std::invalid_argument("EncoderConfig: embed_dim must be divisible by heads");
    }
  }
};

struct MhsaWeights {
  TensorPtr w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;  // all [d,d] / [d]
};

struct LayerWeights {
  TensorPtr ln1_gamma, ln1_beta;
  MhsaWeights attn;
  TensorPtr ln2_gamma, ln2_beta;
  TensorPtr mlp_w1, mlp_b1;  // [d, r*d], [r*d]
  TensorPtr mlp_w2, mlp_b2;  // [r*d, d], [d]
};

/// The two adapters of one encoder layer: CA_1 beside MHSA, CA_2 beside MLP.
struct AdapterPair {
  ConvAdapter ca1, ca2;
};

/// One per-task adapter set: a pair per encoder layer.
struct AdapterSet {
  std::vector<AdapterPair> layers;
  std::vector<TensorPtr> params() const;
};

struct Head {
  TensorPtr w;  // [d, classes]
  TensorPtr b;  // [classes]
  std::vector<TensorPtr> params() const { return {w, b}; }
};

/// Backbone: tokenizer + encoder stack + final LayerNorm. Task heads and
/// adapters live outside so they can be swapped per task.
struct AstModel {
  TokenizerConfig tok_cfg;
  EncoderConfig enc_cfg;
  TokenizerWeights tokenizer;
  std::vector<LayerWeights> layers;
  TensorPtr lnf_gamma, lnf_beta;

  std::vector<TensorPtr> params() const;
  void set_requires_grad(bool v);
};

AstModel init_model(const TokenizerConfig& tcfg, const EncoderConfig& ecfg,
                    const TokenGrid& pos_grid, std::mt19937_64& rng);
AdapterSet init_adapter_set(const AdapterConfig& acfg, std::size_t layers,
                            std::mt19937_64& rng);
Head init_head(std::size_t d, std::size_t classes, std::mt19937_64& rng);

TensorPtr mhsa(const TensorPtr& z, const MhsaWeights& w, const AttentionMask& mask,
               std::size_t heads);

/// Pre-norm residual layer, optionally with the parallel adapter pair:
///   Z'  = MHSA(LN1(Z)) + Z [+ CA1(LN1(Z))]
///   Zout = MLP(LN2(Z')) + Z' [+ CA2(LN2(Z'))]
TensorPtr encoder_layer(const TensorPtr& z, const LayerWeights& w, const EncoderConfig& cfg,
                        const AttentionMask& mask, const AdapterPair* adapters,
                        const TokenGrid& grid);

/// Full forward pass: tokenize, run all layers, final LN, class-token head.
/// Returns logits of shape [1, classes].
TensorPtr forward(const AstModel& model, const Spectrogram& spec, const Head& head,
                  const AdapterSet* adapters = nullptr);

/// All-parameter checksum of the backbone, for frozen-weight assertions.
std::uint32_t model_checksum(const AstModel& model);

}  // namespace ftacl
