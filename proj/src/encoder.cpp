#include "ftacl/encoder.hpp"

#include <cmath>
#include <cstring>

#include "ftacl/io.hpp"

namespace ftacl {
namespace {

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data) v = dist(rng);
}

TensorPtr linear_init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  auto w = make_tensor({in, out}, true);
  fill_normal(*w, rng, 0.02);
  return w;
}

}  // namespace

std::vector<TensorPtr> AdapterSet::params() const {
  std::vector<TensorPtr> out;
  for (const auto& pair : layers) {
    for (const auto& p : pair.ca1.params()) out.push_back(p);
    for (const auto& p : pair.ca2.params()) out.push_back(p);
  }
  return out;
}

std::vector<TensorPtr> AstModel::params() const {
  std::vector<TensorPtr> out = {tokenizer.patch_kernel, tokenizer.patch_bias,
                                tokenizer.cls_token, tokenizer.pos_embed};
  for (const auto& l : layers) {
    for (const auto& p :
         {l.ln1_gamma, l.ln1_beta, l.attn.w_q, l.attn.b_q, l.attn.w_k, l.attn.b_k, l.attn.w_v,
          l.attn.b_v, l.attn.w_o, l.attn.b_o, l.ln2_gamma, l.ln2_beta, l.mlp_w1, l.mlp_b1,
          l.mlp_w2, l.mlp_b2}) {
      out.push_back(p);
    }
  }
  out.push_back(lnf_gamma);
  out.push_back(lnf_beta);
  return out;
}

void AstModel::set_requires_grad(bool v) {
  for (const auto& p : params()) {
    p->requires_grad = v;
    if (v) {
      p->grad.assign(p->data.size(), 0.0);
    } else {
      p->grad.clear();
    }
  }
}

AstModel init_model(const TokenizerConfig& tcfg, const EncoderConfig& ecfg,
                    const TokenGrid& pos_grid, std::mt19937_64& rng) {
  ecfg.validate();
  const std::size_t d = ecfg.embed_dim;
  AstModel m;
  m.tok_cfg = tcfg;
  m.enc_cfg = ecfg;
  m.tokenizer = init_tokenizer(tcfg, pos_grid, rng);
  m.layers.resize(ecfg.layers);
  for (auto& l : m.layers) {
    l.ln1_gamma = make_tensor({d}, std::vector<double>(d, 1.0), true);
    l.ln1_beta = make_tensor({d}, true);
    l.attn.w_q = linear_init(d, d, rng);
    l.attn.b_q = make_tensor({d}, true);
    l.attn.w_k = linear_init(d, d, rng);
    l.attn.b_k = make_tensor({d}, true);
    l.attn.w_v = linear_init(d, d, rng);
    l.attn.b_v = make_tensor({d}, true);
    l.attn.w_o = linear_init(d, d, rng);
    l.attn.b_o = make_tensor({d}, true);
    l.ln2_gamma = make_tensor({d}, std::vector<double>(d, 1.0), true);
    l.ln2_beta = make_tensor({d}, true);
    l.mlp_w1 = linear_init(d, ecfg.mlp_ratio * d, rng);
    l.mlp_b1 = make_tensor({ecfg.mlp_ratio * d}, true);
    l.mlp_w2 = linear_init(ecfg.mlp_ratio * d, d, rng);
    l.mlp_b2 = make_tensor({d}, true);
  }
  m.lnf_gamma = make_tensor({d}, std::vector<double>(d, 1.0), true);
  m.lnf_beta = make_tensor({d}, true);
  return m;
}

AdapterSet init_adapter_set(const AdapterConfig& acfg, std::size_t layers,
                            std::mt19937_64& rng) {
  AdapterSet s;
  s.layers.resize(layers);
  for (auto& pair : s.layers) {
    pair.ca1 = init_adapter(acfg, rng);
    pair.ca2 = init_adapter(acfg, rng);
  }
  return s;
}

Head init_head(std::size_t d, std::size_t classes, std::mt19937_64& rng) {
  Head h;
  h.w = linear_init(d, classes, rng);
  h.b = make_tensor({classes}, true);
  return h;
}

TensorPtr mhsa(const TensorPtr& z, const MhsaWeights& w, const AttentionMask& mask,
               std::size_t heads) {
  if (mask.n != z->rows()) {
    throw TensorError("mhsa: mask size " + std::to_string(mask.n) +
                      " does not match sequence length " + std::to_string(z->rows()));
  }
  const std::size_t d = z->cols();
  const std::size_t dh = d / heads;
  auto q = add_rowvec(matmul(z, w.w_q), w.b_q);
  auto k = add_rowvec(matmul(z, w.w_k), w.b_k);
  auto v = add_rowvec(matmul(z, w.w_v), w.b_v);
  std::vector<TensorPtr> head_outs;
  head_outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    auto qh = slice_cols(q, h * dh, (h + 1) * dh);
    auto kh = slice_cols(k, h * dh, (h + 1) * dh);
    auto vh = slice_cols(v, h * dh, (h + 1) * dh);
    auto scores = scale(matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    auto attn = masked_softmax(scores, mask);
    head_outs.push_back(matmul(attn, vh));
  }
  auto cat = heads == 1 ? head_outs.front() : concat_cols(head_outs);
  return add_rowvec(matmul(cat, w.w_o), w.b_o);
}

TensorPtr encoder_layer(const TensorPtr& z, const LayerWeights& w, const EncoderConfig& cfg,
                        const AttentionMask& mask, const AdapterPair* adapters,
                        const TokenGrid& grid) {
  auto normed1 = layer_norm(z, w.ln1_gamma, w.ln1_beta, cfg.ln_eps);
  auto z_mid = add(mhsa(normed1, w.attn, mask, cfg.heads), z);
  if (adapters) z_mid = add(z_mid, adapter_forward(normed1, adapters->ca1, grid));

  auto normed2 = layer_norm(z_mid, w.ln2_gamma, w.ln2_beta, cfg.ln_eps);
  auto mlp = add_rowvec(
      matmul(gelu(add_rowvec(matmul(normed2, w.mlp_w1), w.mlp_b1)), w.mlp_w2), w.mlp_b2);
  auto z_out = add(mlp, z_mid);
  if (adapters) z_out = add(z_out, adapter_forward(normed2, adapters->ca2, grid));
  return z_out;
}

TensorPtr forward(const AstModel& model, const Spectrogram& spec, const Head& head,
                  const AdapterSet* adapters) {
  if (adapters && adapters->layers.size() != model.layers.size()) {
    throw TensorError("forward: adapter set layer count does not match encoder");
  }
  TokenSequence seq = patchify(spec, model.tokenizer, model.tok_cfg);
  const AttentionMask mask = build_mask(model.enc_cfg.attention_mode, seq.grid);
  TensorPtr z = seq.z;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const AdapterPair* pair = adapters ? &adapters->layers[l] : nullptr;
    z = encoder_layer(z, model.layers[l], model.enc_cfg, mask, pair, seq.grid);
  }
  auto final_ln = layer_norm(z, model.lnf_gamma, model.lnf_beta, model.enc_cfg.ln_eps);
  auto cls = slice_rows(final_ln, 0, 1);
  return add_rowvec(matmul(cls, head.w), head.b);
}

std::uint32_t model_checksum(const AstModel& model) {
  std::uint32_t crc = 0;
  for (const auto& p : model.params()) {
    crc = crc32(reinterpret_cast<const std::uint8_t*>(p->data.data()), p->data.size() * 8, crc);
  }
  return crc;
}

}  // namespace ftacl
