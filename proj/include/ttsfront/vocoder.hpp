#pragma once

// Vocoder bridge: log-mel extraction (the gold target for the
// conditioning head), conditioning-feature file export, and a
// deterministic excitation synthesizer for audible sanity checks.
// Frames are centered at i*hop with reflection padding so the frame
// count follows the shared rounding rule.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/fft.hpp"
#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::vocoder {

struct MelConfig {
  double sample_rate = 24000.0;
  int hop = 240;       // samples
  int window = 1024;   // samples, Hann
  int fft = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 12000.0;
  double log_floor = 1e-5;

  void validate() const {
    if (!(hop > 0 && hop <= window && window <= fft))
      throw DataError("mel config: need 0 < hop <= window <= fft");
    if (!fft::is_power_of_two(static_cast<size_t>(fft)))
      throw DataError("mel config: fft size must be a power of two");
    if (!(fmin >= 0 && fmin < fmax && fmax <= sample_rate / 2))
      throw DataError("mel config: need 0 <= fmin < fmax <= sample_rate/2");
    if (n_mels <= 0) throw DataError("mel config: n_mels must be positive");
  }
};

namespace detail {

// Symmetric reflection without repeating the edge sample.
inline long reflect_index(long i, long n) {
  if (n == 1) return 0;
  long period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

inline std::vector<double> hann_window(int n) {
  constexpr double kPi = 3.14159265358979323846;
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j)
    w[j] = 0.5 * (1.0 - std::cos(2.0 * kPi * j / n));
  return w;
}

}  // namespace detail

// Windowed frame i, centered at i*hop, zero-padded to fft length.
inline std::vector<double> windowed_frame(const std::vector<float>& signal,
                                          const MelConfig& cfg, long i) {
  long n = static_cast<long>(signal.size());
  static thread_local std::vector<double> hann;
  if (static_cast<int>(hann.size()) != cfg.window)
    hann = detail::hann_window(cfg.window);
  std::vector<double> frame(static_cast<size_t>(cfg.fft), 0.0);
  long center = i * cfg.hop;
  long start = center - cfg.window / 2;
  for (int j = 0; j < cfg.window; ++j) {
    long src = detail::reflect_index(start + j, n);
    frame[j] = static_cast<double>(signal[src]) * hann[j];
  }
  return frame;
}

inline long stft_frame_count(size_t n_samples, const MelConfig& cfg) {
  return frame_count(n_samples / cfg.sample_rate, cfg.hop / cfg.sample_rate);
}

// T frames of fft/2+1 complex bins.
inline std::vector<std::vector<std::complex<double>>> stft(
    const std::vector<float>& signal, const MelConfig& cfg) {
  cfg.validate();
  if (signal.empty()) throw DataError("stft: empty signal");
  long T = stft_frame_count(signal.size(), cfg);
  std::vector<std::vector<std::complex<double>>> out;
  out.reserve(static_cast<size_t>(T));
  for (long i = 0; i < T; ++i)
    out.push_back(fft::rfft(windowed_frame(signal, cfg, i)));
  return out;
}

// Triangular filters on the HTK mel scale, n_mels x (fft/2+1).
inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

inline std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.fmax);
  std::vector<double> pts(static_cast<size_t>(cfg.n_mels) + 2);
  for (size_t m = 0; m < pts.size(); ++m)
    pts[m] = mel_to_hz(lo + (hi - lo) * static_cast<double>(m) /
                                (cfg.n_mels + 1));
  return pts;
}

inline std::vector<std::vector<double>> mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  auto pts = mel_center_frequencies(cfg);
  int bins = cfg.fft / 2 + 1;
  std::vector<std::vector<double>> fb(
      static_cast<size_t>(cfg.n_mels),
      std::vector<double>(static_cast<size_t>(bins), 0.0));
  for (int m = 0; m < cfg.n_mels; ++m) {
    double left = pts[m], center = pts[m + 1], right = pts[m + 2];
    for (int k = 0; k < bins; ++k) {
      double f = k * cfg.sample_rate / cfg.fft;
      double w = 0.0;
      if (f > left && f < right)
        w = f <= center ? (f - left) / (center - left)
                        : (right - f) / (right - center);
      fb[m][k] = std::max(0.0, w);
    }
  }
  return fb;
}

// T x n_mels natural-log mel power, floored at log_floor.
inline nn::Tensor<float> mel_spectrogram(const std::vector<float>& signal,
                                         const MelConfig& cfg) {
  auto spectra = stft(signal, cfg);
  auto fb = mel_filterbank(cfg);
  nn::Tensor<float> out(
      {static_cast<int>(spectra.size()), cfg.n_mels});
  for (size_t t = 0; t < spectra.size(); ++t) {
    std::vector<double> power(spectra[t].size());
    for (size_t k = 0; k < power.size(); ++k)
      power[k] = std::norm(spectra[t][k]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (size_t k = 0; k < power.size(); ++k) acc += fb[m][k] * power[k];
      out.row(static_cast<int>(t))[m] =
          static_cast<float>(std::log(std::max(cfg.log_floor, acc)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditioning file: magic "CND1", u32 T, u32 D, then f32 rows.

inline void export_conditioning(const nn::Tensor<float>& frames,
                                const std::string& path) {
  if (frames.shape.size() != 2)
    throw DataError("export_conditioning: frames must be 2-d");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write conditioning file: " + path);
  out.write("CND1", 4);
  write_u32(out, static_cast<uint32_t>(frames.rows()));
  write_u32(out, static_cast<uint32_t>(frames.cols()));
  for (float v : frames.data) write_f32(out, v);
  if (!out) throw DataError("write failed: " + path);
}

inline nn::Tensor<float> import_conditioning(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open conditioning file: " + path);
  expect_magic(in, "CND1", path);
  uint32_t T = read_u32(in, path);
  uint32_t D = read_u32(in, path);
  nn::Tensor<float> frames({static_cast<int>(T), static_cast<int>(D)});
  for (auto& v : frames.data) v = read_f32(in, path);
  return frames;
}

// ---------------------------------------------------------------------------
// Debug excitation synthesizer: voiced frames emit a band-limited
// pulse train (equal-amplitude harmonic sum below Nyquist) with one
// continuous phase accumulator; unvoiced frames emit seeded white
// noise. Both are scaled by the per-frame energy.

inline std::vector<float> debug_synthesize(const std::vector<float>& f0_hz,
                                           const std::vector<uint8_t>& voiced,
                                           const std::vector<float>& energy,
                                           const MelConfig& cfg) {
  if (f0_hz.size() != voiced.size() || f0_hz.size() != energy.size())
    throw DataError("debug_synthesize: frame array length mismatch");
  constexpr double kPi = 3.14159265358979323846;
  size_t T = f0_hz.size();
  std::vector<float> out(T * static_cast<size_t>(cfg.hop), 0.0f);
  std::mt19937 noise_rng(0x9e3779b9u);  // fixed seed: output is deterministic
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  double phase = 0.0;
  for (size_t t = 0; t < T; ++t) {
    double e = energy[t];
    if (voiced[t] && f0_hz[t] > 0.0f) {
      double f0 = f0_hz[t];
      int harmonics = std::max(
          1, static_cast<int>(std::floor(cfg.sample_rate / 2.0 / f0)));
      double step = 2.0 * kPi * f0 / cfg.sample_rate;
      for (int j = 0; j < cfg.hop; ++j) {
        double v = 0.0;
        for (int h = 1; h <= harmonics; ++h) v += std::sin(h * phase);
        out[t * cfg.hop + j] = static_cast<float>(e * v / harmonics);
        phase += step;
        if (phase > 2.0 * kPi) phase -= 2.0 * kPi;
      }
    } else {
      for (int j = 0; j < cfg.hop; ++j)
        out[t * cfg.hop + j] = static_cast<float>(e * noise(noise_rng));
    }
  }
  return out;
}

}  // namespace ttsfront::vocoder
