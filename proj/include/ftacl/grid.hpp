#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ftacl {

/// Strided-patch tokenizer geometry: kernel K, stride S, embedding dim d.
struct TokenizerConfig {
  std::size_t kernel = 16;
  std::size_t stride = 10;
  std::size_t embed_dim = 768;
  std::size_t in_channels = 1;
};

/// Patch-token counts along the frequency (M) and time (T) axes.
struct TokenGrid {
  std::size_t m = 0;
  std::size_t t = 0;

  std::size_t tokens() const { return m * t; }      // patch tokens
  std::size_t seq_len() const { return m * t + 1; }  // with class token

  bool operator==(const TokenGrid&) const = default;
};

/// M = floor((F-K)/S)+1 and T = floor((frames-K)/S)+1.
/// Throws std::invalid_argument if the spectrogram is smaller than the kernel.
inline TokenGrid token_grid(std::size_t freq_bins, std::size_t frames,
                            const TokenizerConfig& cfg) {
  if (freq_bins < cfg.kernel || frames < cfg.kernel) {
    throw std::invalid_argument(
        "token_grid: spectrogram " + std::to_string(freq_bins) + "x" +
        std::to_string(frames) + " smaller than kernel " + std::to_string(cfg.kernel));
  }
  TokenGrid g;
  g.m = (freq_bins - cfg.kernel) / cfg.stride + 1;
  g.t = (frames - cfg.kernel) / cfg.stride + 1;
  return g;
}

}  // namespace ftacl
