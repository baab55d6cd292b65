#include "ftacl/tokenizer.hpp"

#include <algorithm>

namespace ftacl {
namespace {

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data) v = dist(rng);
}

}  // namespace

TokenizerWeights init_tokenizer(const TokenizerConfig& cfg, const TokenGrid& pos_grid,
                                std::mt19937_64& rng) {
  TokenizerWeights w;
  w.patch_kernel = make_tensor({cfg.embed_dim, cfg.in_channels, cfg.kernel, cfg.kernel}, true);
  w.patch_bias = make_tensor({cfg.embed_dim}, true);
  w.cls_token = make_tensor({1, cfg.embed_dim}, true);
  w.pos_embed = make_tensor({pos_grid.seq_len(), cfg.embed_dim}, true);
  w.pos_grid = pos_grid;
  fill_normal(*w.patch_kernel, rng, 0.02);
  fill_normal(*w.cls_token, rng, 0.02);
  fill_normal(*w.pos_embed, rng, 0.02);
  return w;
}

TensorPtr resize_pos_embed(const TensorPtr& pe, const TokenGrid& from, const TokenGrid& to) {
  if (pe->rank() != 2 || pe->rows() != from.seq_len()) {
    throw TensorError("resize_pos_embed: embedding shape " + shape_str(pe->shape) +
                      " does not match source grid");
  }
  if (from == to) return pe;
  const std::size_t d = pe->cols();
  const std::size_t M0 = from.m, T0 = from.t, M = to.m, T = to.t;

  // per-site source corners and bilinear weights (align-corners)
  struct Site {
    std::size_t i00, i01, i10, i11;
    double w00, w01, w10, w11;
  };
  auto sites = std::make_shared<std::vector<Site>>();
  sites->reserve(M * T);
  auto src_coord = [](std::size_t i, std::size_t n_dst, std::size_t n_src) {
    if (n_dst == 1 || n_src == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_src - 1) /
           static_cast<double>(n_dst - 1);
  };
  for (std::size_t m = 0; m < M; ++m) {
    const double y = src_coord(m, M, M0);
    const std::size_t y0 = static_cast<std::size_t>(y);
    const std::size_t y1 = std::min(y0 + 1, M0 - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t t = 0; t < T; ++t) {
      const double x = src_coord(t, T, T0);
      const std::size_t x0 = static_cast<std::size_t>(x);
      const std::size_t x1 = std::min(x0 + 1, T0 - 1);
      const double fx = x - static_cast<double>(x0);
      Site s;
      s.i00 = y0 * T0 + x0;
      s.i01 = y0 * T0 + x1;
      s.i10 = y1 * T0 + x0;
      s.i11 = y1 * T0 + x1;
      s.w00 = (1 - fy) * (1 - fx);
      s.w01 = (1 - fy) * fx;
      s.w10 = fy * (1 - fx);
      s.w11 = fy * fx;
      sites->push_back(s);
    }
  }

  auto out = make_tensor({to.seq_len(), d}, pe->requires_grad);
  out->dtype = pe->dtype;
  // class token passes through untouched
  for (std::size_t c = 0; c < d; ++c) out->data[c] = pe->data[c];
  for (std::size_t p = 0; p < sites->size(); ++p) {
    const Site& s = (*sites)[p];
    for (std::size_t c = 0; c < d; ++c) {
      out->data[(p + 1) * d + c] =
          s.w00 * pe->data[(s.i00 + 1) * d + c] + s.w01 * pe->data[(s.i01 + 1) * d + c] +
          s.w10 * pe->data[(s.i10 + 1) * d + c] + s.w11 * pe->data[(s.i11 + 1) * d + c];
    }
  }
  ensure_finite(*out, "resize_pos_embed");
  if (out->requires_grad) {
    out->parents = {pe};
    Tensor* o = out.get();
    auto src = pe;
    out->backward_fn = [o, src, sites, d]() {
      for (std::size_t c = 0; c < d; ++c) src->grad[c] += o->grad[c];
      for (std::size_t p = 0; p < sites->size(); ++p) {
        const Site& s = (*sites)[p];
        for (std::size_t c = 0; c < d; ++c) {
          const double g = o->grad[(p + 1) * d + c];
          src->grad[(s.i00 + 1) * d + c] += s.w00 * g;
          src->grad[(s.i01 + 1) * d + c] += s.w01 * g;
          src->grad[(s.i10 + 1) * d + c] += s.w10 * g;
          src->grad[(s.i11 + 1) * d + c] += s.w11 * g;
        }
      }
    };
  }
  return out;
}

TokenSequence patchify(const Spectrogram& spec, const TokenizerWeights& w,
                       const TokenizerConfig& cfg) {
  const TokenGrid grid = token_grid(spec.n_mels, spec.frames, cfg);
  // replicate the single-channel spectrogram across in_channels
  TensorPtr x;
  if (cfg.in_channels == 1) {
    x = make_tensor({1, spec.n_mels, spec.frames}, spec.values->data);
  } else {
    x = make_tensor({cfg.in_channels, spec.n_mels, spec.frames});
    for (std::size_t c = 0; c < cfg.in_channels; ++c) {
      std::copy(spec.values->data.begin(), spec.values->data.end(),
                x->data.begin() + c * spec.values->size());
    }
  }
  auto conv = conv2d(x, w.patch_kernel, w.patch_bias, cfg.stride, 0);
  auto tokens = chw_to_tokens(conv);
  auto z = concat_rows(w.cls_token, tokens);
  auto pos = resize_pos_embed(w.pos_embed, w.pos_grid, grid);
  TokenSequence seq;
  seq.z = add(z, pos);
  seq.grid = grid;
  return seq;
}

}  // namespace ftacl
