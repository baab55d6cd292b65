#include "ftacl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ftacl {
namespace {

TensorPtr make_result(std::vector<std::size_t> shape, std::vector<TensorPtr> parents) {
  bool req = false;
  Dtype dt = parents.empty() ? Dtype::f64 : parents.front()->dtype;
  for (const auto& p : parents) req = req || p->requires_grad;
  auto out = make_tensor(std::move(shape), req);
  out->dtype = dt;
  if (req) out->parents = std::move(parents);
  return out;
}

void require_2d(const TensorPtr& t, const char* op) {
  if (t->rank() != 2) {
    throw TensorError(std::string(op) + ": expected rank-2 tensor, got shape " +
                      shape_str(t->shape));
  }
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw TensorError("add: shape mismatch " + shape_str(a->shape) + " vs " +
                      shape_str(b->shape));
  }
  auto out = make_result(a->shape, {a, b});
  for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] + b->data[i];
  ensure_finite(*out, "add");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto pa = a, pb = b;
    out->backward_fn = [o, pa, pb]() {
      for (std::size_t i = 0; i < o->size(); ++i) {
        if (pa->requires_grad) pa->grad[i] += o->grad[i];
        if (pb->requires_grad) pb->grad[i] += o->grad[i];
      }
    };
  }
  return out;
}

TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& bias) {
  require_2d(x, "add_rowvec");
  if (bias->rank() != 1 || bias->shape[0] != x->cols()) {
    throw TensorError("add_rowvec: bias shape " + shape_str(bias->shape) +
                      " does not match columns of " + shape_str(x->shape));
  }
  const std::size_t n = x->rows(), d = x->cols();
  auto out = make_result(x->shape, {x, bias});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c)
      out->data[r * d + c] = x->data[r * d + c] + bias->data[c];
  ensure_finite(*out, "add_rowvec");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x, pb = bias;
    out->backward_fn = [o, px, pb, n, d]() {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
          if (px->requires_grad) px->grad[r * d + c] += o->grad[r * d + c];
          if (pb->requires_grad) pb->grad[c] += o->grad[r * d + c];
        }
    };
  }
  return out;
}

TensorPtr scale(const TensorPtr& x, double c) {
  auto out = make_result(x->shape, {x});
  for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = x->data[i] * c;
  ensure_finite(*out, "scale");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x;
    out->backward_fn = [o, px, c]() {
      for (std::size_t i = 0; i < o->size(); ++i) px->grad[i] += o->grad[i] * c;
    };
  }
  return out;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a->cols() != b->rows()) {
    throw TensorError("matmul: inner extents differ, " + shape_str(a->shape) + " x " +
                      shape_str(b->shape));
  }
  if (a->dtype != b->dtype) throw TensorError("matmul: dtype mismatch");
  const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
  auto out = make_result({m, n}, {a, b});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a->data[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out->data[i * n + j] += av * b->data[p * n + j];
    }
  ensure_finite(*out, "matmul");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto pa = a, pb = b;
    out->backward_fn = [o, pa, pb, m, k, n]() {
      // dA = dC * B^T, dB = A^T * dC
      if (pa->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double g = o->grad[i * n + j];
            for (std::size_t p = 0; p < k; ++p) pa->grad[i * k + p] += g * pb->data[p * n + j];
          }
      }
      if (pb->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = pa->data[i * k + p];
            for (std::size_t j = 0; j < n; ++j) pb->grad[p * n + j] += av * o->grad[i * n + j];
          }
      }
    };
  }
  return out;
}

TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a->cols() != b->cols()) {
    throw TensorError("matmul_nt: inner extents differ, " + shape_str(a->shape) + " x " +
                      shape_str(b->shape) + "^T");
  }
  const std::size_t m = a->rows(), k = a->cols(), n = b->rows();
  auto out = make_result({m, n}, {a, b});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a->data[i * k + p] * b->data[j * k + p];
      out->data[i * n + j] = s;
    }
  ensure_finite(*out, "matmul_nt");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto pa = a, pb = b;
    out->backward_fn = [o, pa, pb, m, k, n]() {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = o->grad[i * n + j];
          for (std::size_t p = 0; p < k; ++p) {
            if (pa->requires_grad) pa->grad[i * k + p] += g * pb->data[j * k + p];
            if (pb->requires_grad) pb->grad[j * k + p] += g * pa->data[i * k + p];
          }
        }
    };
  }
  return out;
}

namespace {
inline double gelu_val(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}
}  // namespace

TensorPtr gelu(const TensorPtr& x) {
  auto out = make_result(x->shape, {x});
  for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = gelu_val(x->data[i]);
  ensure_finite(*out, "gelu");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x;
    out->backward_fn = [o, px]() {
      for (std::size_t i = 0; i < o->size(); ++i)
        px->grad[i] += o->grad[i] * gelu_grad(px->data[i]);
    };
  }
  return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps) {
  require_2d(x, "layer_norm");
  if (eps <= 0) throw TensorError("layer_norm: eps must be positive");
  const std::size_t n = x->rows(), d = x->cols();
  if (gamma->size() != d || beta->size() != d) {
    throw TensorError("layer_norm: gamma/beta must have length " + std::to_string(d));
  }
  auto out = make_result(x->shape, {x, gamma, beta});
  auto xhat = std::make_shared<std::vector<double>>(n * d);
  auto invstd = std::make_shared<std::vector<double>>(n);
  for (std::size_t r = 0; r < n; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += x->data[r * d + c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = x->data[r * d + c] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*invstd)[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (x->data[r * d + c] - mean) * is;
      (*xhat)[r * d + c] = h;
      out->data[r * d + c] = h * gamma->data[c] + beta->data[c];
    }
  }
  ensure_finite(*out, "layer_norm");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x, pg = gamma, pbeta = beta;
    out->backward_fn = [o, px, pg, pbeta, xhat, invstd, n, d]() {
      for (std::size_t r = 0; r < n; ++r) {
        double sum_gdy = 0.0, sum_gdy_xhat = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double gdy = pg->data[c] * o->grad[r * d + c];
          sum_gdy += gdy;
          sum_gdy_xhat += gdy * (*xhat)[r * d + c];
        }
        for (std::size_t c = 0; c < d; ++c) {
          const double gdy = pg->data[c] * o->grad[r * d + c];
          const double h = (*xhat)[r * d + c];
          if (px->requires_grad) {
            px->grad[r * d + c] +=
                (*invstd)[r] * (gdy - (sum_gdy + h * sum_gdy_xhat) / static_cast<double>(d));
          }
          if (pg->requires_grad) pg->grad[c] += o->grad[r * d + c] * h;
          if (pbeta->requires_grad) pbeta->grad[c] += o->grad[r * d + c];
        }
      }
    };
  }
  return out;
}

TensorPtr masked_softmax(const TensorPtr& logits, const AttentionMask& mask) {
  require_2d(logits, "masked_softmax");
  const std::size_t n = logits->rows();
  if (logits->cols() != n || mask.n != n) {
    throw TensorError("masked_softmax: mask size " + std::to_string(mask.n) +
                      " does not match logits " + shape_str(logits->shape));
  }
  auto out = make_result(logits->shape, {logits});
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (mask.at(i, j)) mx = std::max(mx, logits->data[i * n + j]);
    if (!std::isfinite(mx)) throw TensorError("masked_softmax: degenerate attention row");
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask.at(i, j)) {
        const double e = std::exp(logits->data[i * n + j] - mx);
        out->data[i * n + j] = e;
        denom += e;
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      if (mask.at(i, j)) out->data[i * n + j] /= denom;
  }
  ensure_finite(*out, "masked_softmax");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = logits;
    auto m = mask;  // copy; masks are small relative to the score matrix
    out->backward_fn = [o, px, m, n]() {
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          if (m.at(i, j)) dot += o->grad[i * n + j] * o->data[i * n + j];
        for (std::size_t j = 0; j < n; ++j)
          if (m.at(i, j))
            px->grad[i * n + j] += o->data[i * n + j] * (o->grad[i * n + j] - dot);
      }
    };
  }
  return out;
}

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias,
                 std::size_t stride, std::size_t padding) {
  if (x->rank() != 3) throw TensorError("conv2d: input must be [c_in,h,w]");
  if (kernel->rank() != 4) throw TensorError("conv2d: kernel must be [c_out,c_in,kh,kw]");
  if (stride < 1) throw TensorError("conv2d: stride must be >= 1");
  const std::size_t cin = x->shape[0], h = x->shape[1], w = x->shape[2];
  const std::size_t cout = kernel->shape[0], kh = kernel->shape[2], kw = kernel->shape[3];
  if (kernel->shape[1] != cin) {
    throw TensorError("conv2d: kernel expects " + std::to_string(kernel->shape[1]) +
                      " input channels, got " + std::to_string(cin));
  }
  if (h + 2 * padding < kh || w + 2 * padding < kw) {
    throw TensorError("conv2d: kernel larger than padded input");
  }
  if (bias && bias->size() != cout) throw TensorError("conv2d: bias size mismatch");
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
  std::vector<TensorPtr> parents = {x, kernel};
  if (bias) parents.push_back(bias);
  auto out = make_result({cout, oh, ow}, std::move(parents));

  const long ph = static_cast<long>(padding);
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double s = bias ? bias->data[co] : 0.0;
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long iy = static_cast<long>(oy * stride + ky) - ph;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long ix = static_cast<long>(ox * stride + kx) - ph;
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              s += x->data[(ci * h + iy) * w + ix] *
                   kernel->data[((co * cin + ci) * kh + ky) * kw + kx];
            }
          }
        out->data[(co * oh + oy) * ow + ox] = s;
      }
  ensure_finite(*out, "conv2d");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x, pk = kernel, pb = bias;
    out->backward_fn = [o, px, pk, pb, cin, h, w, cout, kh, kw, oh, ow, stride, ph]() {
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const double g = o->grad[(co * oh + oy) * ow + ox];
            if (pb && pb->requires_grad) pb->grad[co] += g;
            for (std::size_t ci = 0; ci < cin; ++ci)
              for (std::size_t ky = 0; ky < kh; ++ky) {
                const long iy = static_cast<long>(oy * stride + ky) - ph;
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                for (std::size_t kx = 0; kx < kw; ++kx) {
                  const long ix = static_cast<long>(ox * stride + kx) - ph;
                  if (ix < 0 || ix >= static_cast<long>(w)) continue;
                  const std::size_t xi = (ci * h + iy) * w + ix;
                  const std::size_t ki = ((co * cin + ci) * kh + ky) * kw + kx;
                  if (px->requires_grad) px->grad[xi] += g * pk->data[ki];
                  if (pk->requires_grad) pk->grad[ki] += g * px->data[xi];
                }
              }
          }
    };
  }
  return out;
}

TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
  require_2d(logits, "cross_entropy");
  const std::size_t n = logits->rows(), C = logits->cols();
  if (labels.size() != n) throw TensorError("cross_entropy: label count mismatch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      throw TensorError("cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                        std::to_string(C) + ")");
    }
  }
  auto out = make_result({1}, {logits});
  auto probs = std::make_shared<std::vector<double>>(n * C);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double mx = logits->data[r * C];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits->data[r * C + c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double e = std::exp(logits->data[r * C + c] - mx);
      (*probs)[r * C + c] = e;
      denom += e;
    }
    for (std::size_t c = 0; c < C; ++c) (*probs)[r * C + c] /= denom;
    total += std::log(denom) + mx - logits->data[r * C + labels[r]];
  }
  out->data[0] = total / static_cast<double>(n);
  ensure_finite(*out, "cross_entropy");
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = logits;
    auto ls = labels;
    out->backward_fn = [o, px, probs, ls, n, C]() {
      const double g = o->grad[0] / static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          const double onehot = (static_cast<std::size_t>(ls[r]) == c) ? 1.0 : 0.0;
          px->grad[r * C + c] += g * ((*probs)[r * C + c] - onehot);
        }
    };
  }
  return out;
}

TensorPtr slice_rows(const TensorPtr& x, std::size_t r0, std::size_t r1) {
  require_2d(x, "slice_rows");
  if (r0 >= r1 || r1 > x->rows()) throw TensorError("slice_rows: bad range");
  const std::size_t d = x->cols();
  auto out = make_result({r1 - r0, d}, {x});
  std::copy(x->data.begin() + r0 * d, x->data.begin() + r1 * d, out->data.begin());
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x;
    out->backward_fn = [o, px, r0, d]() {
      for (std::size_t i = 0; i < o->size(); ++i) px->grad[r0 * d + i] += o->grad[i];
    };
  }
  return out;
}

TensorPtr slice_cols(const TensorPtr& x, std::size_t c0, std::size_t c1) {
  require_2d(x, "slice_cols");
  if (c0 >= c1 || c1 > x->cols()) throw TensorError("slice_cols: bad range");
  const std::size_t n = x->rows(), d = x->cols(), w = c1 - c0;
  auto out = make_result({n, w}, {x});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) out->data[r * w + c] = x->data[r * d + c0 + c];
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x;
    out->backward_fn = [o, px, n, d, w, c0]() {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < w; ++c) px->grad[r * d + c0 + c] += o->grad[r * w + c];
    };
  }
  return out;
}

TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b) {
  require_2d(a, "concat_rows");
  require_2d(b, "concat_rows");
  if (a->cols() != b->cols()) throw TensorError("concat_rows: column mismatch");
  const std::size_t d = a->cols(), na = a->rows(), nb = b->rows();
  auto out = make_result({na + nb, d}, {a, b});
  std::copy(a->data.begin(), a->data.end(), out->data.begin());
  std::copy(b->data.begin(), b->data.end(), out->data.begin() + na * d);
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto pa = a, pb = b;
    out->backward_fn = [o, pa, pb, na, d]() {
      if (pa->requires_grad)
        for (std::size_t i = 0; i < pa->size(); ++i) pa->grad[i] += o->grad[i];
      if (pb->requires_grad)
        for (std::size_t i = 0; i < pb->size(); ++i) pb->grad[i] += o->grad[na * d + i];
    };
  }
  return out;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw TensorError("concat_cols: no parts");
  const std::size_t n = parts.front()->rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p->rows() != n) throw TensorError("concat_cols: row mismatch");
    total += p->cols();
  }
  auto out = make_result({n, total}, parts);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p->cols();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < w; ++c) out->data[r * total + off + c] = p->data[r * w + c];
    off += w;
  }
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto ps = parts;
    out->backward_fn = [o, ps, n, total]() {
      std::size_t off = 0;
      for (const auto& p : ps) {
        const std::size_t w = p->cols();
        if (p->requires_grad) {
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < w; ++c) p->grad[r * w + c] += o->grad[r * total + off + c];
        }
        off += w;
      }
    };
  }
  return out;
}

TensorPtr tokens_to_chw(const TensorPtr& x, const TokenGrid& grid) {
  require_2d(x, "tokens_to_chw");
  if (x->rows() != grid.tokens()) {
    throw TensorError("tokens_to_chw: expected " + std::to_string(grid.tokens()) +
                      " tokens, got " + std::to_string(x->rows()));
  }
  const std::size_t c = x->cols(), M = grid.m, T = grid.t;
  auto out = make_result({c, M, T}, {x});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t t = 0; t < T; ++t)
        out->data[(ch * M + m) * T + t] = x->data[(m * T + t) * c + ch];
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x;
    out->backward_fn = [o, px, c, M, T]() {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t t = 0; t < T; ++t)
            px->grad[(m * T + t) * c + ch] += o->grad[(ch * M + m) * T + t];
    };
  }
  return out;
}

TensorPtr chw_to_tokens(const TensorPtr& x) {
  if (x->rank() != 3) throw TensorError("chw_to_tokens: input must be [c,M,T]");
  const std::size_t c = x->shape[0], M = x->shape[1], T = x->shape[2];
  auto out = make_result({M * T, c}, {x});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t t = 0; t < T; ++t)
        out->data[(m * T + t) * c + ch] = x->data[(ch * M + m) * T + t];
  if (out->requires_grad) {
    Tensor* o = out.get();
    auto px = x;
    out->backward_fn = [o, px, c, M, T]() {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t t = 0; t < T; ++t)
            px->grad[(ch * M + m) * T + t] += o->grad[(m * T + t) * c + ch];
    };
  }
  return out;
}

}  // namespace ftacl
