#pragma once

// RAPT-style pitch ground truth: normalized cross-correlation (NCCF)
// candidate generation in two passes (coarse scan on a decimated
// signal, full-rate refinement around the coarse peaks), then a
// dynamic-programming voicing decision over per-frame candidates plus
// an explicit unvoiced state. Frames start at i*hop and look forward
// one correlation window.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"

namespace ttsfront::pitch {

struct PitchConfig {
  double f0_min = 60.0;    // Hz
  double f0_max = 400.0;   // Hz
  double hop_s = 0.010;
  double corr_window_s = 0.025;
  double pass1_rate = 2000.0;  // Hz
  double nccf_cand_thresh = 0.30;
  int max_cands_per_frame = 20;
  double vuv_transition_cost = 0.3;
  double freq_jump_weight = 0.8;
  double unvoiced_local_cost = 0.5;
  bool parabolic_interp = false;

  void validate(double sample_rate) const {
    if (!(f0_min > 0 && f0_min < f0_max))
      throw DataError("pitch config: need 0 < f0_min < f0_max");
    if (!(f0_max < pass1_rate / 2))
      throw DataError("pitch config: need f0_max < pass1_rate/2");
    if (!(hop_s > 0)) throw DataError("pitch config: hop_s must be positive");
    if (sample_rate < 2 * f0_max)
      throw DataError("pitch: sample rate " + std::to_string(sample_rate) +
                      " below 2*f0_max");
  }
};

struct PitchTrack {
  std::vector<float> f0_hz;      // 0 where unvoiced
  std::vector<uint8_t> voiced;   // 0 or 1, same length
  double hop_s = 0.0;
};

struct Candidate {
  double lag = 0.0;   // samples at full rate; fractional under interpolation
  double nccf = 0.0;
};

// Normalized cross-correlation over [frame_start, frame_start+window).
// Returns 0 when either energy term is below 1e-9.
inline double nccf(const std::vector<double>& s, long frame_start, long window,
                   long lag) {
  if (frame_start < 0 || lag < 0 || window <= 0 ||
      frame_start + window + lag > static_cast<long>(s.size()))
    throw DataError("nccf: window or lag out of range");
  double e0 = 0.0, e1 = 0.0, num = 0.0;
  for (long j = frame_start; j < frame_start + window; ++j) {
    e0 += s[j] * s[j];
    e1 += s[j + lag] * s[j + lag];
    num += s[j] * s[j + lag];
  }
  constexpr double kFloor = 1e-9;
  if (e0 < kFloor || e1 < kFloor) return 0.0;
  return num / std::sqrt(e0 * e1);
}

namespace detail {

// Averaging decimator: each output sample is the mean of one block.
inline std::vector<double> decimate(const std::vector<double>& s, int factor) {
  std::vector<double> out;
  out.reserve(s.size() / factor + 1);
  for (size_t i = 0; i + factor <= s.size(); i += factor) {
    double acc = 0.0;
    for (int k = 0; k < factor; ++k) acc += s[i + k];
    out.push_back(acc / factor);
  }
  return out;
}

inline double nccf_or_zero(const std::vector<double>& s, long frame_start,
                           long window, long lag) {
  if (frame_start < 0 || frame_start + window + lag > static_cast<long>(s.size()))
    return 0.0;
  return nccf(s, frame_start, window, lag);
}

}  // namespace detail

inline std::vector<std::vector<Candidate>> candidates_two_pass(
    const std::vector<double>& signal, double sample_rate,
    const PitchConfig& cfg) {
  cfg.validate(sample_rate);
  long n = static_cast<long>(signal.size());
  long full_window = std::lround(cfg.corr_window_s * sample_rate);
  if (n < full_window)
    throw DataError("pitch: signal shorter than one correlation window");

  int factor = std::max(1, static_cast<int>(std::lround(sample_rate /
                                                        cfg.pass1_rate)));
  double rate1 = sample_rate / factor;
  auto coarse = detail::decimate(signal, factor);
  long w1 = std::max<long>(1, std::lround(cfg.corr_window_s * rate1));
  long lag1_min = std::max<long>(1, static_cast<long>(std::floor(rate1 / cfg.f0_max)));
  long lag1_max = static_cast<long>(std::ceil(rate1 / cfg.f0_min));

  long lag_min = static_cast<long>(std::ceil(sample_rate / cfg.f0_max));
  long lag_max = static_cast<long>(std::floor(sample_rate / cfg.f0_min));
  long delta = static_cast<long>(std::ceil(sample_rate / cfg.pass1_rate));

  long T = frame_count(n / sample_rate, cfg.hop_s);
  std::vector<std::vector<Candidate>> frames(static_cast<size_t>(T));

  // Tail frames clamp their start back so the window plus maximal lag
  // still fits; every frame then correlates against real signal.
  auto clamp_start = [](long fs, long len, long need) {
    return std::max<long>(0, std::min(fs, len - need));
  };

  std::vector<double> corr(static_cast<size_t>(lag1_max + 1), 0.0);
  for (long i = 0; i < T; ++i) {
    long fs1 = clamp_start(std::lround(i * cfg.hop_s * rate1),
                           static_cast<long>(coarse.size()), w1 + lag1_max);
    for (long l = lag1_min; l <= lag1_max; ++l)
      corr[l] = detail::nccf_or_zero(coarse, fs1, w1, l);

    long fs = clamp_start(std::lround(i * cfg.hop_s * sample_rate), n,
                          full_window + lag_max);
    auto& out = frames[i];
    for (long l = lag1_min; l <= lag1_max; ++l) {
      bool peak = corr[l] >= cfg.nccf_cand_thresh &&
                  (l == lag1_min || corr[l] >= corr[l - 1]) &&
                  (l == lag1_max || corr[l] >= corr[l + 1]);
      if (!peak) continue;

      // Full-rate refinement around the scaled coarse peak.
      long center = l * factor;
      long best_lag = -1;
      double best = -2.0;
      for (long fl = std::max(lag_min, center - delta);
           fl <= std::min(lag_max, center + delta); ++fl) {
        double v = detail::nccf_or_zero(signal, fs, full_window, fl);
        if (v > best) {
          best = v;
          best_lag = fl;
        }
      }
      if (best_lag < 0 || best < cfg.nccf_cand_thresh) continue;

      double lag_out = best_lag;
      if (cfg.parabolic_interp && best_lag > lag_min && best_lag < lag_max) {
        double ym = detail::nccf_or_zero(signal, fs, full_window, best_lag - 1);
        double yp = detail::nccf_or_zero(signal, fs, full_window, best_lag + 1);
        double denom = ym - 2 * best + yp;
        if (std::abs(denom) > 1e-12) {
          double shift = 0.5 * (ym - yp) / denom;
          if (std::abs(shift) <= 1.0) lag_out += shift;
        }
      }
      bool dup = false;
      for (auto& c : out)
        if (std::lround(c.lag) == std::lround(lag_out)) {
          dup = true;
          if (best > c.nccf) c = {lag_out, best};
          break;
        }
      if (!dup) out.push_back({lag_out, best});
    }

    std::stable_sort(out.begin(), out.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.nccf > b.nccf;
                     });
    if (static_cast<int>(out.size()) > cfg.max_cands_per_frame)
      out.resize(cfg.max_cands_per_frame);
  }
  return frames;
}

// Minimal-cost path over per-frame states (candidates + one unvoiced
// state). Local cost is 1-nccf for voiced states and unvoiced_local_cost
// for the unvoiced state; transitions cost vuv_transition_cost on a
// voicing flip and freq_jump_weight*|log(f_i/f_{i-1})| between voiced
// states. Ties resolve to the lowest state index.
inline PitchTrack dp_track(const std::vector<std::vector<Candidate>>& cands,
                           const PitchConfig& cfg, double sample_rate,
                           std::vector<int>* path_out = nullptr) {
  PitchTrack track;
  track.hop_s = cfg.hop_s;
  size_t T = cands.size();
  if (T == 0) return track;

  auto f0_of = [&](const Candidate& c) {
    double f0 = sample_rate / c.lag;
    return std::min(cfg.f0_max, std::max(cfg.f0_min, f0));
  };

  std::vector<std::vector<double>> cost(T);
  std::vector<std::vector<int>> back(T);
  for (size_t i = 0; i < T; ++i) {
    size_t states = cands[i].size() + 1;
    cost[i].assign(states, 0.0);
    back[i].assign(states, -1);
    for (size_t j = 0; j < states; ++j) {
      bool voiced = j < cands[i].size();
      double local = voiced ? 1.0 - cands[i][j].nccf : cfg.unvoiced_local_cost;
      if (i == 0) {
        cost[i][j] = local;
        continue;
      }
      double best = 0.0;
      int best_prev = -1;
      for (size_t k = 0; k < cost[i - 1].size(); ++k) {
        bool prev_voiced = k < cands[i - 1].size();
        double trans;
        if (voiced && prev_voiced)
          trans = cfg.freq_jump_weight *
                  std::abs(std::log(f0_of(cands[i][j]) /
                                    f0_of(cands[i - 1][k])));
        else if (voiced != prev_voiced)
          trans = cfg.vuv_transition_cost;
        else
          trans = 0.0;
        double c = cost[i - 1][k] + trans;
        if (best_prev < 0 || c < best) {
          best = c;
          best_prev = static_cast<int>(k);
        }
      }
      cost[i][j] = best + local;
      back[i][j] = best_prev;
    }
  }

  size_t last = 0;
  for (size_t j = 1; j < cost[T - 1].size(); ++j)
    if (cost[T - 1][j] < cost[T - 1][last]) last = j;

  std::vector<int> path(T);
  path[T - 1] = static_cast<int>(last);
  for (size_t i = T - 1; i > 0; --i) path[i - 1] = back[i][path[i]];
  if (path_out) *path_out = path;

  track.f0_hz.resize(T, 0.0f);
  track.voiced.resize(T, 0);
  for (size_t i = 0; i < T; ++i) {
    int j = path[i];
    if (j < static_cast<int>(cands[i].size())) {
      track.voiced[i] = 1;
      track.f0_hz[i] = static_cast<float>(f0_of(cands[i][j]));
    }
  }
  return track;
}

// Total cost of one explicit path, shared with the brute-force tests.
inline double path_cost(const std::vector<std::vector<Candidate>>& cands,
                        const PitchConfig& cfg, double sample_rate,
                        const std::vector<int>& path) {
  double total = 0.0;
  for (size_t i = 0; i < path.size(); ++i) {
    bool voiced = path[i] < static_cast<int>(cands[i].size());
    total += voiced ? 1.0 - cands[i][path[i]].nccf : cfg.unvoiced_local_cost;
    if (i == 0) continue;
    bool prev_voiced = path[i - 1] < static_cast<int>(cands[i - 1].size());
    if (voiced && prev_voiced) {
      double f0 = std::min(cfg.f0_max,
                           std::max(cfg.f0_min, sample_rate / cands[i][path[i]].lag));
      double f0p = std::min(cfg.f0_max, std::max(cfg.f0_min,
                            sample_rate / cands[i - 1][path[i - 1]].lag));
      total += cfg.freq_jump_weight * std::abs(std::log(f0 / f0p));
    } else if (voiced != prev_voiced) {
      total += cfg.vuv_transition_cost;
    }
  }
  return total;
}

inline PitchTrack extract_pitch(const std::vector<float>& audio,
                                double sample_rate, const PitchConfig& cfg) {
  std::vector<double> s(audio.begin(), audio.end());
  return dp_track(candidates_two_pass(s, sample_rate, cfg), cfg, sample_rate);
}

// ---------------------------------------------------------------------------
// Speaker-level log-f0 statistics and normalization.

struct F0Stats {
  double mean_log = 0.0;
  double std_log = 0.0;
};

inline F0Stats f0_statistics(const std::vector<PitchTrack>& tracks) {
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  for (const auto& t : tracks)
    for (size_t i = 0; i < t.voiced.size(); ++i)
      if (t.voiced[i]) {
        double l = std::log(static_cast<double>(t.f0_hz[i]));
        sum += l;
        sumsq += l * l;
        ++count;
      }
  if (count < 100)
    throw DataError("f0_statistics: need at least 100 voiced frames, got " +
                    std::to_string(count));
  F0Stats stats;
  stats.mean_log = sum / count;
  double var = sumsq / count - stats.mean_log * stats.mean_log;
  stats.std_log = std::max(1e-3, std::sqrt(std::max(0.0, var)));
  return stats;
}

// (ln f0 - mean)/std on voiced frames, 0 on unvoiced frames.
inline std::vector<float> normalize_f0(const PitchTrack& track,
                                       const F0Stats& stats) {
  std::vector<float> out(track.f0_hz.size(), 0.0f);
  for (size_t i = 0; i < out.size(); ++i)
    if (track.voiced[i])
      out[i] = static_cast<float>(
          (std::log(static_cast<double>(track.f0_hz[i])) - stats.mean_log) /
          stats.std_log);
  return out;
}

// ---------------------------------------------------------------------------
// Cache file: magic "PTK1", u32 frame count, then per frame f32 f0_hz
// and u8 voiced, little-endian.

inline void write_ptk1(const std::string& path, const PitchTrack& track) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pitch file: " + path);
  out.write("PTK1", 4);
  write_u32(out, static_cast<uint32_t>(track.f0_hz.size()));
  for (size_t i = 0; i < track.f0_hz.size(); ++i) {
    write_f32(out, track.f0_hz[i]);
    write_u8(out, track.voiced[i]);
  }
  if (!out) throw DataError("write failed: " + path);
}

inline PitchTrack read_ptk1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pitch file: " + path);
  expect_magic(in, "PTK1", path);
  uint32_t n = read_u32(in, path);
  PitchTrack track;
  track.f0_hz.resize(n);
  track.voiced.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    track.f0_hz[i] = read_f32(in, path);
    track.voiced[i] = read_u8(in, path);
    if (track.voiced[i] > 1)
      throw DataError(path + ": corrupt voiced flag at frame " +
                      std::to_string(i));
    if (!track.voiced[i] && track.f0_hz[i] != 0.0f)
      throw DataError(path + ": unvoiced frame " + std::to_string(i) +
                      " has nonzero f0");
  }
  return track;
}

}  // namespace ttsfront::pitch
