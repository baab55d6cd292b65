#include <doctest.h>

#include <random>

#include "ftacl/tokenizer.hpp"

using namespace ftacl;

namespace {

Spectrogram random_spec(std::size_t n_mels, std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Spectrogram s;
  s.n_mels = n_mels;
  s.frames = frames;
  s.values = make_tensor({n_mels, frames});
  for (double& v : s.values->data) v = dist(rng);
  return s;
}

}  // namespace

TEST_CASE("reference geometries produce the documented grids") {
  TokenizerConfig cfg;  // K=16, S=10
  {
    auto g = token_grid(128, 101, cfg);
    CHECK(g.m == 12);
    CHECK(g.t == 9);
    CHECK(g.tokens() == 108);
    CHECK(g.seq_len() == 109);
  }
  {
    auto g = token_grid(128, 501, cfg);
    CHECK(g.m == 12);
    CHECK(g.t == 49);
    CHECK(g.tokens() == 588);
  }
  {
    auto g = token_grid(128, 1011, cfg);
    CHECK(g.m == 12);
    CHECK(g.t == 100);
  }
  CHECK_THROWS_AS(token_grid(12, 101, cfg), std::invalid_argument);
  CHECK_THROWS_AS(token_grid(128, 15, cfg), std::invalid_argument);
}

TEST_CASE("grid formula matches brute-force patch placement") {
  TokenizerConfig cfg;
  cfg.kernel = 5;
  cfg.stride = 3;
  for (std::size_t f = 5; f <= 40; ++f) {
    for (std::size_t t = 5; t <= 40; t += 3) {
      auto g = token_grid(f, t, cfg);
      // count placements directly
      std::size_t m_count = 0;
      for (std::size_t r = 0; r + cfg.kernel <= f; r += cfg.stride) ++m_count;
      std::size_t t_count = 0;
      for (std::size_t c = 0; c + cfg.kernel <= t; c += cfg.stride) ++t_count;
      CHECK(g.m == m_count);
      CHECK(g.t == t_count);
    }
  }
}

TEST_CASE("patchify produces [MT+1, d] with the class token in row 0") {
  std::mt19937_64 rng(17);
  TokenizerConfig cfg;
  cfg.embed_dim = 24;
  auto w = init_tokenizer(cfg, TokenGrid{12, 9}, rng);
  auto spec = random_spec(128, 101, 1);
  auto seq = patchify(spec, w, cfg);
  CHECK((seq.grid == TokenGrid{12, 9}));
  REQUIRE((seq.z->shape == std::vector<std::size_t>{109, 24}));

  // row 0 is cls_token + pos_embed row 0, untouched by the conv
  for (std::size_t c = 0; c < 24; ++c) {
    CHECK(seq.z->data[c] == w.cls_token->data[c] + w.pos_embed->data[c]);
  }
}

TEST_CASE("patch rows follow the 1 + m*T + t layout") {
  std::mt19937_64 rng(2);
  TokenizerConfig cfg;
  cfg.kernel = 4;
  cfg.stride = 4;
  cfg.embed_dim = 3;
  TokenGrid grid{2, 3};
  auto w = init_tokenizer(cfg, grid, rng);
  // zero the position embedding so rows are pure patch responses
  std::fill(w.pos_embed->data.begin(), w.pos_embed->data.end(), 0.0);
  auto spec = random_spec(8, 12, 3);
  auto seq = patchify(spec, w, cfg);
  REQUIRE((seq.z->shape == std::vector<std::size_t>{7, 3}));

  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t t = 0; t < 3; ++t) {
      // direct dot-product oracle for patch (m, t)
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = w.patch_bias->data[c];
        for (std::size_t i = 0; i < 4; ++i) {
          for (std::size_t j = 0; j < 4; ++j) {
            acc += spec.values->data[(m * 4 + i) * 12 + (t * 4 + j)] *
                   w.patch_kernel->data[((c * 1 + 0) * 4 + i) * 4 + j];
          }
        }
        const std::size_t row = 1 + m * 3 + t;
        CHECK(seq.z->data[row * 3 + c] == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("same-grid resize returns the identical tensor") {
  std::mt19937_64 rng(5);
  TokenizerConfig cfg;
  cfg.embed_dim = 8;
  auto w = init_tokenizer(cfg, TokenGrid{3, 4}, rng);
  auto out = resize_pos_embed(w.pos_embed, TokenGrid{3, 4}, TokenGrid{3, 4});
  CHECK(out.get() == w.pos_embed.get());
}

TEST_CASE("resize preserves the class token and the four grid corners") {
  std::mt19937_64 rng(6);
  TokenizerConfig cfg;
  cfg.embed_dim = 5;
  TokenGrid from{4, 6}, to{7, 3};
  auto w = init_tokenizer(cfg, from, rng);
  auto out = resize_pos_embed(w.pos_embed, from, to);
  REQUIRE((out->shape == std::vector<std::size_t>{to.seq_len(), 5}));

  auto src_row = [&](std::size_t m, std::size_t t) { return 1 + m * from.t + t; };
  auto dst_row = [&](std::size_t m, std::size_t t) { return 1 + m * to.t + t; };
  for (std::size_t c = 0; c < 5; ++c) {
    CHECK(out->data[c] == w.pos_embed->data[c]);  // class token row
    CHECK(out->data[dst_row(0, 0) * 5 + c] ==
          doctest::Approx(w.pos_embed->data[src_row(0, 0) * 5 + c]).epsilon(1e-12));
    CHECK(out->data[dst_row(0, to.t - 1) * 5 + c] ==
          doctest::Approx(w.pos_embed->data[src_row(0, from.t - 1) * 5 + c]).epsilon(1e-12));
    CHECK(out->data[dst_row(to.m - 1, 0) * 5 + c] ==
          doctest::Approx(w.pos_embed->data[src_row(from.m - 1, 0) * 5 + c]).epsilon(1e-12));
    CHECK(out->data[dst_row(to.m - 1, to.t - 1) * 5 + c] ==
          doctest::Approx(w.pos_embed->data[src_row(from.m - 1, from.t - 1) * 5 + c])
              .epsilon(1e-12));
  }
}

TEST_CASE("3x3 to 5x7 resize matches a hand-rolled bilinear oracle") {
  std::mt19937_64 rng(9);
  TokenizerConfig cfg;
  cfg.embed_dim = 2;
  TokenGrid from{3, 3}, to{5, 7};
  auto w = init_tokenizer(cfg, from, rng);
  auto out = resize_pos_embed(w.pos_embed, from, to);

  auto src = [&](double m, double t, std::size_t c) {
    // align-corners bilinear sample of the 3x3 patch grid
    const std::size_t y0 = static_cast<std::size_t>(m), x0 = static_cast<std::size_t>(t);
    const std::size_t y1 = std::min<std::size_t>(y0 + 1, 2), x1 = std::min<std::size_t>(x0 + 1, 2);
    const double fy = m - static_cast<double>(y0), fx = t - static_cast<double>(x0);
    auto v = [&](std::size_t y, std::size_t x) {
      return w.pos_embed->data[(1 + y * 3 + x) * 2 + c];
    };
    return (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) +
           fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
  };
  for (std::size_t m = 0; m < 5; ++m) {
    for (std::size_t t = 0; t < 7; ++t) {
      const double sy = static_cast<double>(m) * 2.0 / 4.0;
      const double sx = static_cast<double>(t) * 2.0 / 6.0;
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(out->data[(1 + m * 7 + t) * 2 + c] ==
              doctest::Approx(src(sy, sx, c)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("degenerate source or target rows fall back to row 0") {
  std::mt19937_64 rng(10);
  TokenizerConfig cfg;
  cfg.embed_dim = 3;
  auto w = init_tokenizer(cfg, TokenGrid{1, 4}, rng);
  auto out = resize_pos_embed(w.pos_embed, TokenGrid{1, 4}, TokenGrid{3, 4});
  REQUIRE((out->shape == std::vector<std::size_t>{13, 3}));
  // every target row of the single-frequency source repeats that source row
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(out->data[(1 + m * 4 + t) * 3 + c] ==
              doctest::Approx(w.pos_embed->data[(1 + t) * 3 + c]).epsilon(1e-12));
      }
    }
  }
}
