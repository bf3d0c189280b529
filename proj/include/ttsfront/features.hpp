#pragma once

// Assembly of prosody training batches from the aligned corpus and the
// per-utterance cache files (pitch tracks, mel conditioning, word
// vectors). Frame counts from the three sources may disagree with the
// duration sum by a couple of frames because pitch and mel framing
// handle the signal tail differently; small gaps are padded or cropped,
// larger ones are data errors.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/corpus.hpp"
#include "ttsfront/pitch.hpp"
#include "ttsfront/prosody.hpp"
#include "ttsfront/vocoder.hpp"
#include "ttsfront/wordvec.hpp"

namespace ttsfront::features {

struct FeatureConfig {
  double hop_s = 0.010;
  int max_pad_frames = 2;      // tolerated |frames - duration sum|
  double mel_log_floor = 1e-5; // pad rows hold ln of this
};

// ---------------------------------------------------------------------------
// Per-speaker f0 statistics file: `speaker<TAB>mean_log<TAB>std_log`.

inline void write_f0_stats(const std::string& path,
                           const std::map<std::string, pitch::F0Stats>& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create f0 stats file: " + path);
  out << std::setprecision(17);
  for (const auto& [speaker, st] : stats) {
    if (speaker.find_first_of("\t\n") != std::string::npos)
      throw DataError("speaker name contains tab or newline: '" + speaker +
                      "'");
    out << speaker << '\t' << st.mean_log << '\t' << st.std_log << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

inline std::map<std::string, pitch::F0Stats> read_f0_stats(
    const std::string& path) {
  std::string text = read_text_file(path);
  std::map<std::string, pitch::F0Stats> stats;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos
                                        : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError("f0 stats line " + std::to_string(line_no) +
                      ": expected 3 tab-separated fields");
    std::string speaker = line.substr(0, t1);
    pitch::F0Stats st;
    try {
      st.mean_log = std::stod(line.substr(t1 + 1, t2 - t1 - 1));
      st.std_log = std::stod(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw DataError("f0 stats line " + std::to_string(line_no) +
                      ": malformed number");
    }
    if (!(st.std_log > 0))
      throw DataError("f0 stats line " + std::to_string(line_no) +
                      ": std must be positive");
    if (!stats.emplace(speaker, st).second)
      throw DataError("f0 stats line " + std::to_string(line_no) +
                      ": duplicate speaker '" + speaker + "'");
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Single-utterance assembly.

// Aligns a frame feature of length `available` (counted from `offset`
// into the source) with the duration sum `target`, padding or cropping
// within tolerance.
inline void check_frame_gap(long available, long target, int max_pad,
                            const std::string& what, const std::string& id) {
  long diff = available - target;
  if (diff < -max_pad || diff > max_pad)
    throw DataError("utterance '" + id + "': " + what + " has " +
                    std::to_string(available) + " frames but durations sum to " +
                    std::to_string(target) + " (tolerance " +
                    std::to_string(max_pad) + ")");
}

template <class Real>
prosody::ProsodyBatch<Real> assemble_batch(
    const corpus::Utterance& utt, const pitch::PitchTrack& track,
    const pitch::F0Stats& stats, const nn::Tensor<float>& mel,
    const nn::Tensor<float>& word_vecs,
    const std::map<std::string, int>& phoneme_to_id, int speaker_id,
    const FeatureConfig& cfg = {}) {
  if (std::abs(track.hop_s - cfg.hop_s) > 1e-9)
    throw DataError("utterance '" + utt.id + "': pitch hop " +
                    std::to_string(track.hop_s) + "s does not match " +
                    std::to_string(cfg.hop_s) + "s");
  if (static_cast<size_t>(word_vecs.rows()) != utt.words.size())
    throw DataError("utterance '" + utt.id + "': " +
                    std::to_string(word_vecs.rows()) + " word vectors for " +
                    std::to_string(utt.words.size()) + " words");

  prosody::ProsodyBatch<Real> b;
  b.id = utt.id;
  b.speaker_id = speaker_id;
  b.gold_durations = corpus::durations_in_frames(utt, cfg.hop_s);
  b.word_of_phoneme = corpus::word_of_phoneme(utt);
  for (const auto& seg : utt.segments) {
    auto it = phoneme_to_id.find(seg.phoneme);
    b.phoneme_ids.push_back(it == phoneme_to_id.end() ? 0 : it->second);
  }
  b.word_vecs.resize(word_vecs.shape);
  for (size_t i = 0; i < word_vecs.size(); ++i)
    b.word_vecs.data[i] = static_cast<Real>(word_vecs.data[i]);

  long T = b.total_frames();
  // Features are framed over the whole audio; the alignment may start
  // later. Slice from the frame nearest the first segment boundary.
  long offset = std::llround(utt.segments.front().start_s / cfg.hop_s);

  long pitch_avail = static_cast<long>(track.f0_hz.size()) - offset;
  check_frame_gap(pitch_avail, T, cfg.max_pad_frames, "pitch track", utt.id);
  auto norm = pitch::normalize_f0(track, stats);
  b.gold_f0.assign(static_cast<size_t>(T), Real(0));
  b.gold_voiced.assign(static_cast<size_t>(T), 0);
  for (long t = 0; t < T; ++t) {
    long src = t + offset;
    if (src < 0 || src >= static_cast<long>(track.f0_hz.size())) continue;
    b.gold_voiced[static_cast<size_t>(t)] = track.voiced[static_cast<size_t>(src)];
    if (track.voiced[static_cast<size_t>(src)])
      b.gold_f0[static_cast<size_t>(t)] =
          static_cast<Real>(norm[static_cast<size_t>(src)]);
  }

  long mel_avail = static_cast<long>(mel.rows()) - offset;
  check_frame_gap(mel_avail, T, cfg.max_pad_frames, "mel conditioning", utt.id);
  Real pad = static_cast<Real>(std::log(cfg.mel_log_floor));
  b.gold_mel.resize({static_cast<int>(T), mel.cols()});
  for (long t = 0; t < T; ++t) {
    long src = t + offset;
    Real* dst = b.gold_mel.row(static_cast<int>(t));
    if (src < 0 || src >= mel.rows()) {
      std::fill(dst, dst + mel.cols(), pad);
    } else {
      const float* s = mel.row(static_cast<int>(src));
      for (int d = 0; d < mel.cols(); ++d) dst[d] = static_cast<Real>(s[d]);
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Whole-corpus loading against the cache directory layout
// (<dir>/<id>.ptk1, <dir>/<id>.cnd1, <dir>/<id>.web1 or .wes1).

inline std::vector<std::string> collect_phonemes(
    const corpus::AlignedCorpus& corpus) {
  std::set<std::string> seen;
  for (const auto& u : corpus.utterances)
    for (const auto& seg : u.segments) seen.insert(seg.phoneme);
  return {seen.begin(), seen.end()};
}

inline std::vector<std::string> collect_speakers(
    const corpus::AlignedCorpus& corpus) {
  std::set<std::string> seen(corpus.speakers.begin(), corpus.speakers.end());
  return {seen.begin(), seen.end()};
}

struct TrainingPaths {
  std::string pitch_dir;    // <id>.ptk1 plus f0_stats.tsv
  std::string mel_dir;      // <id>.cnd1
  std::string wordvec_dir;  // <id>.web1 or <id>.wes1
};

struct TrainingSet {
  std::vector<prosody::ProsodyBatch<float>> batches;
  std::vector<std::string> phonemes;  // sorted unique
  std::vector<std::string> speakers;  // sorted unique
  std::map<std::string, pitch::F0Stats> f0_stats;
  int d_w = 0;
  int d_cond = 0;
};

inline nn::Tensor<float> load_utterance_word_vectors(
    const std::filesystem::path& dir, const corpus::Utterance& utt) {
  auto web = dir / (utt.id + ".web1");
  auto wes = dir / (utt.id + ".wes1");
  std::filesystem::path chosen;
  if (std::filesystem::exists(web))
    chosen = web;
  else if (std::filesystem::exists(wes))
    chosen = wes;
  else if (utt.words.empty())
    return nn::Tensor<float>({0, 0});
  else
    throw DataError("utterance '" + utt.id + "': no word vector file under " +
                    dir.string());
  return wordvec::read_word_vectors(chosen.string());
}

inline TrainingSet load_training_set(const corpus::AlignedCorpus& corpus,
                                     const TrainingPaths& paths,
                                     const FeatureConfig& cfg = {}) {
  namespace fs = std::filesystem;
  TrainingSet set;
  set.phonemes = collect_phonemes(corpus);
  set.speakers = collect_speakers(corpus);
  set.f0_stats =
      read_f0_stats((fs::path(paths.pitch_dir) / "f0_stats.tsv").string());

  std::map<std::string, int> phoneme_to_id;
  for (size_t i = 0; i < set.phonemes.size(); ++i)
    phoneme_to_id[set.phonemes[i]] = static_cast<int>(i) + 1;
  std::map<std::string, int> speaker_to_id;
  for (size_t i = 0; i < set.speakers.size(); ++i)
    speaker_to_id[set.speakers[i]] = static_cast<int>(i);

  for (const auto& utt : corpus.utterances) {
    auto st = set.f0_stats.find(utt.speaker);
    if (st == set.f0_stats.end())
      throw DataError("utterance '" + utt.id + "': no f0 statistics for speaker '" +
                      utt.speaker + "'");
    auto track =
        pitch::read_ptk1((fs::path(paths.pitch_dir) / (utt.id + ".ptk1")).string());
    // The file records no hop; the pipeline config owns it.
    track.hop_s = cfg.hop_s;
    auto mel = vocoder::import_conditioning(
        (fs::path(paths.mel_dir) / (utt.id + ".cnd1")).string());
    auto wv = load_utterance_word_vectors(paths.wordvec_dir, utt);

    if (set.d_cond == 0)
      set.d_cond = mel.cols();
    else if (mel.cols() != set.d_cond)
      throw DataError("utterance '" + utt.id + "': mel width " +
                      std::to_string(mel.cols()) + " differs from " +
                      std::to_string(set.d_cond));
    if (wv.rows() > 0) {
      if (set.d_w == 0)
        set.d_w = wv.cols();
      else if (wv.cols() != set.d_w)
        throw DataError("utterance '" + utt.id + "': word vector width " +
                        std::to_string(wv.cols()) + " differs from " +
                        std::to_string(set.d_w));
    }

    set.batches.push_back(assemble_batch<float>(utt, track, st->second, mel, wv,
                                                phoneme_to_id,
                                                speaker_to_id.at(utt.speaker),
                                                cfg));
  }

  // Utterances without words carry 0x0 vectors; widen them so every
  // batch agrees with the discovered width.
  for (auto& b : set.batches)
    if (b.word_vecs.rows() == 0) b.word_vecs.resize({0, set.d_w});
  return set;
}

}  // namespace ttsfront::features
