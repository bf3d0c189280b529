#pragma once

// Synthetic corpus and lexicon shared by the CLI tests and the
// acceptance suite. Three utterances over a small phoneme inventory:
// vowels are fixed-frequency sines, everything else is silence, all
// segment boundaries land on exact frame multiples so that duration
// extraction is unambiguous. The g2p lexicon is a vowel-only toy
// language whose labels exercise void tokens, a two-phoneme label and
// punctuation pass-through, and whose phonemes match the corpus
// inventory so the full synthesis path stays in vocabulary.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ttsfront/corpus.hpp"
#include "ttsfront/g2p.hpp"
#include "ttsfront/nn/tensor.hpp"
#include "ttsfront/textgrid.hpp"
#include "ttsfront/wav.hpp"
#include "ttsfront/wordvec.hpp"

namespace synthetic {

namespace fs = std::filesystem;

constexpr int kSampleRate = 24000;
constexpr int kHopSamples = 240;
constexpr double kHopS = 0.010;

struct PhonemeSpec {
  std::string name;
  int frames;    // deterministic duration per phoneme identity
  double f0_hz;  // 0 means silence
};

inline const std::vector<PhonemeSpec>& phoneme_table() {
  static const std::vector<PhonemeSpec> table{
      {"sil", 10, 0.0}, {" ", 6, 0.0},   {",", 12, 0.0}, {"!", 14, 0.0},
      {"?", 14, 0.0},   {"aa", 8, 120.0}, {"ii", 12, 180.0}, {"uu", 16, 240.0},
  };
  return table;
}

inline const PhonemeSpec& spec_of(const std::string& name) {
  for (const auto& s : phoneme_table())
    if (s.name == name) return s;
  throw ttsfront::DataError("synthetic: unknown phoneme '" + name + "'");
}

struct UttWord {
  std::string word;
  int first;  // phoneme indices, inclusive
  int last;
};

struct UttSpec {
  std::string id;
  std::string speaker;
  std::vector<std::string> phonemes;
  std::vector<UttWord> words;

  long total_frames() const {
    long total = 0;
    for (const auto& p : phonemes) total += spec_of(p).frames;
    return total;
  }
};

inline std::vector<UttSpec> utterance_specs() {
  return {
      {"utt0",
       "ana",
       {"sil", "aa", "ii", " ", "uu", "aa", "!", "sil"},
       {{"ai", 1, 2}, {"ua", 4, 5}}},
      {"utt1",
       "ben",
       {"sil", "uu", "aa", "ii", " ", "aa", "ii", "uu", " ", "uu", "ii", "aa",
        " ", "aa", "uu", "?", "sil"},
       {{"uai", 1, 3}, {"aiu", 5, 7}, {"uia", 9, 11}, {"au", 13, 14}}},
      {"utt2",
       "ana",
       {"sil", "ii", "uu", ",", "aa", "ii", " ", "uu", "aa", "ii", "!", "sil"},
       {{"iu", 1, 2}, {"ai", 4, 5}, {"uai", 7, 9}}},
  };
}

inline std::vector<float> render_audio(const UttSpec& spec) {
  std::vector<float> samples;
  samples.reserve(static_cast<size_t>(spec.total_frames()) * kHopSamples);
  constexpr double kPi = 3.14159265358979323846;
  for (const auto& name : spec.phonemes) {
    const auto& ph = spec_of(name);
    long n = static_cast<long>(ph.frames) * kHopSamples;
    for (long i = 0; i < n; ++i) {
      double v = ph.f0_hz > 0
                     ? 0.4 * std::sin(2.0 * kPi * ph.f0_hz * i / kSampleRate)
                     : 0.0;
      samples.push_back(static_cast<float>(v));
    }
  }
  return samples;
}

inline std::string render_textgrid(const UttSpec& spec) {
  using ttsfront::textgrid::Interval;
  using ttsfront::textgrid::Tier;
  Tier phones, words;
  phones.name = "phones";
  words.name = "words";
  double t = 0.0;
  std::vector<double> starts(spec.phonemes.size() + 1);
  for (size_t i = 0; i < spec.phonemes.size(); ++i) {
    starts[i] = t;
    double end = t + spec_of(spec.phonemes[i]).frames * kHopS;
    phones.intervals.push_back({t, end, spec.phonemes[i]});
    t = end;
  }
  starts[spec.phonemes.size()] = t;
  phones.xmax = t;
  words.xmax = t;

  // Word intervals cover their phoneme spans; gaps carry empty labels.
  double cursor = 0.0;
  for (const auto& w : spec.words) {
    double ws = starts[static_cast<size_t>(w.first)];
    double we = starts[static_cast<size_t>(w.last) + 1];
    if (ws > cursor) words.intervals.push_back({cursor, ws, ""});
    words.intervals.push_back({ws, we, w.word});
    cursor = we;
  }
  if (cursor < t) words.intervals.push_back({cursor, t, ""});
  return ttsfront::textgrid::serialize({phones, words});
}

// Deterministic word vectors keyed on the word text.
inline ttsfront::nn::Tensor<float> word_vectors_for(const UttSpec& spec,
                                                    int d_w) {
  ttsfront::nn::Tensor<float> out(
      {static_cast<int>(spec.words.size()), d_w});
  for (size_t w = 0; w < spec.words.size(); ++w) {
    uint64_t h = ttsfront::stable_hash(spec.words[w].word, 7);
    for (int d = 0; d < d_w; ++d) {
      uint64_t x = h + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(d + 1);
      x ^= x >> 33;
      out.row(static_cast<int>(w))[d] =
          static_cast<float>(static_cast<double>(x % 2000) / 1000.0 - 1.0);
    }
  }
  return out;
}

// Writes <id>.wav, <id>.TextGrid and manifest.tsv under data_dir and
// <id>.web1 under wordvec_dir.
inline void write_corpus(const fs::path& data_dir, const fs::path& wordvec_dir,
                         int d_w) {
  fs::create_directories(data_dir);
  fs::create_directories(wordvec_dir);
  std::ofstream manifest((data_dir / "manifest.tsv").string(),
                         std::ios::binary);
  for (const auto& spec : utterance_specs()) {
    ttsfront::wav::write((data_dir / (spec.id + ".wav")).string(),
                         render_audio(spec), kSampleRate);
    std::ofstream tg((data_dir / (spec.id + ".TextGrid")).string(),
                     std::ios::binary);
    tg << render_textgrid(spec);
    manifest << spec.id << '\t' << spec.speaker << '\t' << spec.id
             << ".TextGrid\t" << spec.id << ".wav\n";
    ttsfront::wordvec::write_web1((wordvec_dir / (spec.id + ".web1")).string(),
                                  word_vectors_for(spec, d_w));
  }
}

// ---------------------------------------------------------------------------
// Lexicon: words over {a, e, i, u, y}; rules produce the corpus vowel
// phonemes, a void label for silent letters, and one two-phoneme label.
//   "au"      -> "aa" on the a, "-" on the u
//   "y"       -> "aa+ii"
//   final "e" -> "-"
//   a/i/u     -> "aa"/"ii"/"uu"; non-final e -> "ii"
// Punctuation and space pass through as literal labels.

inline bool lexicon_is_punct(const std::string& g) {
  return g == " " || g == "," || g == "!" || g == "?";
}

inline ttsfront::g2p::LabelSequence label_sentence(
    const std::string& sentence) {
  ttsfront::g2p::LabelSequence seq;
  seq.graphemes = ttsfront::g2p::split_graphemes(sentence);
  size_t n = seq.graphemes.size();
  seq.labels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const std::string& g = seq.graphemes[i];
    if (!seq.labels[i].empty()) continue;  // consumed by a digraph
    if (lexicon_is_punct(g)) {
      seq.labels[i] = g;
      continue;
    }
    bool word_final = i + 1 == n || lexicon_is_punct(seq.graphemes[i + 1]);
    if (g == "a" && i + 1 < n && seq.graphemes[i + 1] == "u") {
      seq.labels[i] = "aa";
      seq.labels[i + 1] = "-";
    } else if (g == "y") {
      seq.labels[i] = "aa+ii";
    } else if (g == "e") {
      seq.labels[i] = word_final ? "-" : "ii";
    } else if (g == "a") {
      seq.labels[i] = "aa";
    } else if (g == "i") {
      seq.labels[i] = "ii";
    } else if (g == "u") {
      seq.labels[i] = "uu";
    } else {
      throw ttsfront::DataError("synthetic lexicon: unsupported grapheme '" +
                                g + "'");
    }
  }
  return seq;
}

inline std::vector<std::string> lexicon_sentences(size_t count = 50) {
  static const std::vector<std::string> pool{
      "ai", "ya", "au", "yui", "aie", "uau",
      "iya", "eau", "uy", "aia", "yu", "ue"};
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (int i = 0; out.size() < count; ++i) {
    if (i > 10000)
      throw ttsfront::DataError("synthetic lexicon: sentence pool exhausted");
    const std::string& w1 = pool[static_cast<size_t>(i) % pool.size()];
    const std::string& w2 =
        pool[static_cast<size_t>(i * 5 + i / 7 + 3) % pool.size()];
    const std::string& w3 =
        pool[static_cast<size_t>(i * 11 + 2) % pool.size()];
    std::string s;
    switch (i % 4) {
      case 0: s = w1 + " " + w2 + "!"; break;
      case 1: s = w1 + " " + w2 + "?"; break;
      case 2: s = w1 + ", " + w2 + "!"; break;
      default: s = w1 + " " + w2 + " " + w3 + "?"; break;
    }
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

inline std::vector<ttsfront::g2p::LabelSequence> lexicon50() {
  std::vector<ttsfront::g2p::LabelSequence> out;
  for (const auto& s : lexicon_sentences()) out.push_back(label_sentence(s));
  return out;
}

inline void write_lexicon(const fs::path& file) {
  ttsfront::g2p::write_g2p_tsv(file.string(), lexicon50());
}

}  // namespace synthetic
