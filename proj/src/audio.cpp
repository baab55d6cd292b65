#include "ftacl/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace ftacl {
namespace {

std::uint32_t rd_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void wr_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

/// Reflect index into [0, n), librosa-style (edge not repeated), bouncing for
/// short signals.
std::size_t reflect_index(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  long m = i % period;
  if (m < 0) m += period;
  if (m >= n) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

WavClip decode_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw AudioError("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const std::uint8_t* data_ptr = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* ck = bytes.data() + pos;
    const std::uint32_t ck_len = rd_u32(ck + 4);
    if (pos + 8 + ck_len > bytes.size()) throw AudioError("truncated chunk in WAV file");
    if (std::memcmp(ck, "fmt ", 4) == 0) {
      if (ck_len < 16) throw AudioError("fmt chunk too short");
      const std::uint16_t format = rd_u16(ck + 8);
      channels = rd_u16(ck + 10);
      sample_rate = rd_u32(ck + 12);
      bits = rd_u16(ck + 22);
      if (format != 1) throw AudioError("unsupported codec (only PCM supported)");
      if (bits != 16) throw AudioError("unsupported bit depth " + std::to_string(bits));
      if (channels != 1 && channels != 2) {
        throw AudioError("unsupported channel count " + std::to_string(channels));
      }
      have_fmt = true;
    } else if (std::memcmp(ck, "data", 4) == 0) {
      data_ptr = ck + 8;
      data_len = ck_len;
    }
    pos += 8 + ck_len + (ck_len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) throw AudioError("missing fmt chunk");
  if (!data_ptr) throw AudioError("missing data chunk");
  if (sample_rate == 0) throw AudioError("zero sample rate");

  WavClip clip;
  clip.sample_rate = sample_rate;
  const std::size_t frame_bytes = 2u * channels;
  const std::size_t n = data_len / frame_bytes;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      std::int16_t s;
      std::memcpy(&s, data_ptr + i * frame_bytes + 2 * c, 2);
      acc += static_cast<double>(s);
    }
    clip.samples[i] = acc / (32768.0 * channels);
  }
  return clip;
}

std::vector<std::uint8_t> encode_wav(const WavClip& clip) {
  std::vector<std::uint8_t> out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wr_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  wr_u32(out, 16);
  wr_u16(out, 1);  // PCM
  wr_u16(out, 1);  // mono
  wr_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  wr_u32(out, static_cast<std::uint32_t>(clip.sample_rate * 2));
  wr_u16(out, 2);
  wr_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wr_u32(out, data_len);
  for (double v : clip.samples) {
    const double clamped = std::clamp(v, -1.0, 32767.0 / 32768.0);
    const auto s = static_cast<std::int16_t>(std::lround(clamped * 32768.0));
    wr_u16(out, static_cast<std::uint16_t>(s));
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(std::size_t n_mels, std::size_t n_fft,
                                                double sample_rate, double fmin, double fmax) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers(n_mels + 2);
  for (std::size_t i = 0; i < n_mels + 2; ++i) {
    centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                        static_cast<double>(n_mels + 1));
  }
  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f < hi) {
        w = (f <= mid) ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      fb[m][k] = std::max(0.0, w);
    }
  }
  return fb;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n) {
    throw AudioError("fft_radix2: size must be a power of two");
  }
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

std::size_t frontend_win_samples(const WavClip& clip, const FrontendConfig& cfg) {
  return static_cast<std::size_t>(std::lround(cfg.win_ms * clip.sample_rate / 1000.0));
}

std::size_t frontend_hop_samples(const WavClip& clip, const FrontendConfig& cfg) {
  return static_cast<std::size_t>(std::lround(cfg.hop_ms * clip.sample_rate / 1000.0));
}

std::size_t frontend_fft_size(std::size_t win_samples) {
  // oversampled so that 128 narrow mel triangles all keep nonempty support
  std::size_t n = 1;
  while (n < win_samples) n <<= 1;
  return n * 4;
}

Spectrogram log_mel(const WavClip& clip, const FrontendConfig& cfg) {
  if (clip.sample_rate == 0 || clip.samples.empty()) throw AudioError("empty clip");
  const std::size_t win = frontend_win_samples(clip, cfg);
  const std::size_t hop = frontend_hop_samples(clip, cfg);
  if (clip.samples.size() < hop) throw AudioError("clip shorter than one hop");
  const std::size_t n_fft = frontend_fft_size(win);
  const std::size_t n_bins = n_fft / 2 + 1;
  const double fmax = cfg.fmax > 0 ? cfg.fmax : clip.sample_rate / 2.0;
  const auto fb = mel_filterbank(cfg.n_mels, n_fft, clip.sample_rate, cfg.fmin, fmax);

  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(win - 1));
  }

  const std::size_t frames = clip.samples.size() / hop + 1;
  const long pad = static_cast<long>(win / 2);
  const long n_samp = static_cast<long>(clip.samples.size());

  Spectrogram spec;
  spec.n_mels = cfg.n_mels;
  spec.frames = frames;
  spec.values = make_tensor({cfg.n_mels, frames});

  std::vector<double> re(n_fft), im(n_fft), power(n_bins);
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    const long start = static_cast<long>(f * hop) - pad;
    for (std::size_t i = 0; i < win; ++i) {
      re[i] = clip.samples[reflect_index(start + static_cast<long>(i), n_samp)] * window[i];
    }
    fft_radix2(re, im);
    for (std::size_t k = 0; k < n_bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) e += fb[m][k] * power[k];
      spec.values->data[m * frames + f] = std::log(std::max(e, cfg.log_floor));
    }
  }
  ensure_finite(*spec.values, "log_mel");
  return spec;
}

}  // namespace ftacl
