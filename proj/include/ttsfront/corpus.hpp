#pragma once

// Aligned-corpus data model: utterances built from TextGrid forced
// alignments plus audio metadata, exact frame-level durations, manifest
// loading and the seeded train/validation split.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/textgrid.hpp"
#include "ttsfront/wav.hpp"

namespace ttsfront::corpus {

struct PhonemeSegment {
  std::string phoneme;
  double start_s = 0.0;
  double end_s = 0.0;
};

// Inclusive range of phoneme indices covered by one word.
struct WordSpan {
  std::string word;
  int first_phoneme_idx = 0;
  int last_phoneme_idx = 0;
};

struct Utterance {
  std::string id;
  std::string speaker;
  std::vector<PhonemeSegment> segments;
  std::vector<WordSpan> words;
  int sample_rate = 0;
  long n_samples = 0;
  std::string audio_path;

  double span_s() const {
    return segments.empty() ? 0.0
                            : segments.back().end_s - segments.front().start_s;
  }
};

struct AlignedCorpus {
  std::vector<Utterance> utterances;
  std::vector<std::string> speakers;  // order of first appearance
};

// Builds an utterance from a phone tier and a word tier. Word
// membership is decided by phoneme midpoint containment, so one-frame
// jitter on segment boundaries cannot flip the assignment. Phonemes
// whose midpoint lies in no (non-empty) word interval belong to no word.
inline Utterance build_utterance(const textgrid::Tier& phone_tier,
                                 const textgrid::Tier& word_tier,
                                 const std::string& speaker, int sample_rate,
                                 long n_samples, double slack_s = 0.010) {
  Utterance utt;
  utt.speaker = speaker;
  utt.sample_rate = sample_rate;
  utt.n_samples = n_samples;
  for (const auto& iv : phone_tier.intervals) {
    if (!(iv.end_s > iv.start_s))
      throw DataError("phone interval with non-positive length at " +
                      std::to_string(iv.start_s) + "s");
    utt.segments.push_back({iv.label, iv.start_s, iv.end_s});
  }
  if (!utt.segments.empty() && sample_rate > 0) {
    double audio_end = static_cast<double>(n_samples) / sample_rate;
    if (utt.segments.back().end_s > audio_end + slack_s)
      throw DataError("alignment runs past the audio: last segment ends at " +
                      std::to_string(utt.segments.back().end_s) +
                      "s but audio is " + std::to_string(audio_end) + "s");
  }

  // Non-empty word intervals, in order.
  std::vector<const textgrid::Interval*> words;
  for (const auto& iv : word_tier.intervals)
    if (!iv.label.empty()) words.push_back(&iv);

  std::vector<int> word_of_phoneme(utt.segments.size(), -1);
  for (size_t pi = 0; pi < utt.segments.size(); ++pi) {
    double mid = 0.5 * (utt.segments[pi].start_s + utt.segments[pi].end_s);
    int hits = 0;
    for (size_t wi = 0; wi < words.size(); ++wi) {
      if (mid >= words[wi]->start_s && mid < words[wi]->end_s) {
        word_of_phoneme[pi] = static_cast<int>(wi);
        ++hits;
      }
    }
    if (hits > 1)
      throw DataError("phoneme '" + utt.segments[pi].phoneme +
                      "' midpoint falls inside two word intervals");
  }
  for (size_t wi = 0; wi < words.size(); ++wi) {
    int first = -1, last = -1;
    for (size_t pi = 0; pi < word_of_phoneme.size(); ++pi) {
      if (word_of_phoneme[pi] == static_cast<int>(wi)) {
        if (first < 0) first = static_cast<int>(pi);
        last = static_cast<int>(pi);
      }
    }
    if (first >= 0) utt.words.push_back({words[wi]->label, first, last});
  }
  return utt;
}

// Per-phoneme index into the utterance's word list, -1 for phonemes
// belonging to no word. Derived from the WordSpans.
inline std::vector<int> word_of_phoneme(const Utterance& utt) {
  std::vector<int> out(utt.segments.size(), -1);
  for (size_t wi = 0; wi < utt.words.size(); ++wi)
    for (int pi = utt.words[wi].first_phoneme_idx;
         pi <= utt.words[wi].last_phoneme_idx; ++pi)
      out[static_cast<size_t>(pi)] = static_cast<int>(wi);
  return out;
}

// Exact frame-level durations: floor allocation plus largest-remainder
// distribution of the deficit so the total equals round(span/hop).
// Remainder ties break toward the earliest segment.
inline std::vector<int> durations_in_frames(const Utterance& utt,
                                            double hop_s) {
  if (utt.segments.empty())
    throw DataError("durations_in_frames: utterance has no segments");
  if (!(hop_s > 0)) throw DataError("durations_in_frames: hop must be > 0");
  size_t n = utt.segments.size();
  long total = frame_count(utt.span_s(), hop_s);

  std::vector<int> frames(n);
  std::vector<std::pair<long, size_t>> remainders;  // (quantized rem, index)
  long floor_sum = 0;
  for (size_t i = 0; i < n; ++i) {
    double raw = (utt.segments[i].end_s - utt.segments[i].start_s) / hop_s;
    double fl = std::floor(raw);
    frames[i] = static_cast<int>(fl);
    floor_sum += frames[i];
    // Quantize so ulp-level noise in the division cannot reorder ties.
    long rem_q = std::llround((raw - fl) * 1e9);
    remainders.push_back({rem_q, i});
  }
  long deficit = total - floor_sum;
  if (deficit < 0)
    throw DataError("durations_in_frames: segment lengths exceed span");
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first > b.first;
                     return a.second < b.second;
                   });
  for (long d = 0; d < deficit; ++d)
    frames[remainders[static_cast<size_t>(d % static_cast<long>(n))].second]++;
  return frames;
}

struct ManifestEntry {
  std::string id;
  std::string speaker;
  std::string textgrid_path;
  std::string audio_path;
};

// Manifest: one record per line, `id<TAB>speaker<TAB>textgrid<TAB>audio`.
// Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::string text = read_text_file(path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(
          pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 4)
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected 4 tab-separated fields, got " +
                      std::to_string(cols.size()));
    if (!seen.insert(cols[0]).second)
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": duplicate utterance id '" + cols[0] + "'");
    entries.push_back({cols[0], cols[1], resolve(cols[2]), resolve(cols[3])});
  }
  return entries;
}

struct CorpusOptions {
  std::string phone_tier = "phones";
  std::string word_tier = "words";
};

inline const textgrid::Tier& find_tier(const std::vector<textgrid::Tier>& tiers,
                                       const std::string& name,
                                       const std::string& file) {
  for (const auto& t : tiers)
    if (t.name == name) return t;
  std::string have;
  for (const auto& t : tiers) have += (have.empty() ? "" : ", ") + t.name;
  throw DataError("no tier named '" + name + "' in " + file + " (tiers: " +
                  have + ")");
}

inline AlignedCorpus load_corpus(const std::string& manifest_path,
                                 const CorpusOptions& opts = {}) {
  AlignedCorpus corpus;
  std::set<std::string> speaker_seen;
  for (const auto& entry : read_manifest(manifest_path)) {
    auto tiers = textgrid::parse(read_text_file(entry.textgrid_path));
    const auto& phones = find_tier(tiers, opts.phone_tier, entry.textgrid_path);
    const auto& words = find_tier(tiers, opts.word_tier, entry.textgrid_path);
    wav::Info info = wav::read_info(entry.audio_path);
    Utterance utt = build_utterance(phones, words, entry.speaker,
                                    info.sample_rate, info.n_samples);
    utt.id = entry.id;
    utt.audio_path = entry.audio_path;
    if (speaker_seen.insert(entry.speaker).second)
      corpus.speakers.push_back(entry.speaker);
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

// Deterministic split keyed on (utterance id, seed) only, so reordering
// the manifest cannot change which side an utterance lands on.
// Validation size is round(N * valid_fraction).
inline std::pair<AlignedCorpus, AlignedCorpus> split_corpus(
    const AlignedCorpus& corpus, double valid_fraction, uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0))
    throw DataError("split_corpus: valid_fraction must be in (0, 1)");
  size_t n = corpus.utterances.size();
  long n_valid =
      std::llround(static_cast<double>(n) * valid_fraction);
  std::vector<std::pair<uint64_t, std::string>> keyed;
  for (const auto& u : corpus.utterances)
    keyed.push_back({stable_hash(u.id, seed), u.id});
  std::sort(keyed.begin(), keyed.end());
  std::set<std::string> valid_ids;
  for (long i = 0; i < n_valid && i < static_cast<long>(n); ++i)
    valid_ids.insert(keyed[static_cast<size_t>(i)].second);

  AlignedCorpus train, valid;
  std::set<std::string> train_sp, valid_sp;
  for (const auto& u : corpus.utterances) {
    AlignedCorpus& dst = valid_ids.count(u.id) ? valid : train;
    std::set<std::string>& sp = valid_ids.count(u.id) ? valid_sp : train_sp;
    if (sp.insert(u.speaker).second) dst.speakers.push_back(u.speaker);
    dst.utterances.push_back(u);
  }
  return {train, valid};
}

}  // namespace ttsfront::corpus
