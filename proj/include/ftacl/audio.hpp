#pragma once

#include <cstdint>
#include <vector>

#include "ftacl/tensor.hpp"

namespace ftacl {

class AudioError : public std::runtime_error {
 public:
  explicit AudioError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mono waveform in [-1, 1].
struct WavClip {
  std::size_t sample_rate = 16000;
  std::vector<double> samples;
};

struct FrontendConfig {
  double win_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_mels = 128;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means sample_rate / 2
  double log_floor = 1e-10;
};

/// Log-mel energies, shape [n_mels, frames].
struct Spectrogram {
  std::size_t n_mels = 0;
  std::size_t frames = 0;
  TensorPtr values;  // [n_mels, frames]
};

/// RIFF/WAVE PCM-16 decoder; stereo is averaged to mono, samples scaled by
/// 1/32768. Throws AudioError on malformed headers or unsupported formats.
WavClip decode_wav(const std::vector<std::uint8_t>& bytes);

/// PCM-16 mono writer, for fixtures and round-trip checks.
std::vector<std::uint8_t> encode_wav(const WavClip& clip);

/// HTK mel scale: 2595 * log10(1 + f/700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filterbank, [n_mels, n_fft/2 + 1]. Rows are nonnegative with
/// contiguous support.
std::vector<std::vector<double>> mel_filterbank(std::size_t n_mels, std::size_t n_fft,
                                                double sample_rate, double fmin, double fmax);

/// In-place radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

/// Center-padded (reflect) framing with a Hamming window, power spectrum,
/// mel filterbank, natural log with floor. frames = floor(len/hop) + 1.
Spectrogram log_mel(const WavClip& clip, const FrontendConfig& cfg);

std::size_t frontend_win_samples(const WavClip& clip, const FrontendConfig& cfg);
std::size_t frontend_hop_samples(const WavClip& clip, const FrontendConfig& cfg);
std::size_t frontend_fft_size(std::size_t win_samples);

}  // namespace ftacl
