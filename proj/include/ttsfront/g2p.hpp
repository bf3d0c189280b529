#pragma once

// Hybrid grapheme-to-phoneme conversion as 1:1 sequence labeling.
// Every grapheme gets exactly one label: a phoneme, a "+"-joined
// multi-phoneme label, the void token "-", or a literal punctuation
// or space token. Decoding drops voids and splits joins, yielding a
// hybrid phoneme+punctuation sequence. The tagger is a character
// embedding, three convolutions, a BiLSTM and a softmax projection.
// Model selection during training maximizes sentence accuracy (SAR)
// with patience-based early stopping.
//
// Caveat: a hyphen grapheme with no phonemes would encode to "-",
// which is indistinguishable from the void token and is dropped at
// decode time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/nn/checkpoint.hpp"
#include "ttsfront/nn/layers.hpp"
#include "ttsfront/nn/losses.hpp"
#include "ttsfront/nn/lstm.hpp"
#include "ttsfront/nn/optim.hpp"

namespace ttsfront::g2p {

inline constexpr const char* kVoidLabel = "-";

struct LabelSequence {
  std::vector<std::string> graphemes;  // one UTF-8 character each
  std::vector<std::string> labels;     // same length as graphemes
};

inline std::vector<std::string> split_graphemes(const std::string& text) {
  std::vector<std::string> out;
  for (uint32_t cp : utf8_decode(text)) out.push_back(utf8_encode(cp));
  return out;
}

inline bool is_punctuation_token(const std::string& tok) {
  auto cps = utf8_decode(tok);
  return cps.size() == 1 && is_punctuation_cp(cps[0]);
}

inline LabelSequence encode_alignment(
    const std::vector<std::string>& graphemes,
    const std::vector<std::vector<std::string>>& phoneme_spans) {
  if (graphemes.size() != phoneme_spans.size())
    throw DataError("encode_alignment: grapheme count " +
                    std::to_string(graphemes.size()) + " != span count " +
                    std::to_string(phoneme_spans.size()));
  LabelSequence seq;
  seq.graphemes = graphemes;
  seq.labels.reserve(graphemes.size());
  for (size_t i = 0; i < graphemes.size(); ++i) {
    const auto& span = phoneme_spans[i];
    if (span.empty()) {
      seq.labels.push_back(is_punctuation_token(graphemes[i]) ? graphemes[i]
                                                              : kVoidLabel);
      continue;
    }
    std::string label = span[0];
    for (size_t k = 1; k < span.size(); ++k) {
      label += '+';
      label += span[k];
    }
    seq.labels.push_back(label);
  }
  return seq;
}

// One decoded output token and the index of the grapheme it came from.
struct HybridToken {
  std::string text;
  int grapheme = -1;
};

inline std::vector<HybridToken> decode_labels_tokens(const LabelSequence& seq) {
  if (seq.labels.size() != seq.graphemes.size())
    throw DataError("decode_labels: label/grapheme length mismatch");
  std::vector<HybridToken> out;
  for (size_t i = 0; i < seq.labels.size(); ++i) {
    const std::string& label = seq.labels[i];
    if (label == kVoidLabel) continue;
    size_t start = 0;
    while (start <= label.size()) {
      size_t plus = label.find('+', start);
      if (plus == std::string::npos) plus = label.size();
      if (plus > start)
        out.push_back({label.substr(start, plus - start), static_cast<int>(i)});
      start = plus + 1;
    }
  }
  return out;
}

inline std::vector<std::string> decode_labels(const LabelSequence& seq) {
  std::vector<std::string> out;
  for (const auto& tok : decode_labels_tokens(seq)) out.push_back(tok.text);
  return out;
}

// ---------------------------------------------------------------------------
// Training data file: TSV, one sentence per line,
//   graphemes<TAB>space-separated labels
// The space label cannot sit in a space-separated column, so it is
// written as the sentinel "<sp>".

inline std::string escape_label(const std::string& label) {
  return escape_token(label);
}

inline std::string unescape_label(const std::string& label) {
  return unescape_token(label);
}

inline void validate_label(const std::string& label, int line_no) {
  if (label.empty())
    throw DataError("g2p data line " + std::to_string(line_no) +
                    ": empty label");
  if (label == kVoidLabel) return;
  if (label.front() == '+' || label.back() == '+' ||
      label.find("++") != std::string::npos)
    throw DataError("g2p data line " + std::to_string(line_no) +
                    ": malformed multi-phoneme label '" + label + "'");
}

inline std::vector<LabelSequence> read_g2p_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open g2p data file: " + path);
  std::vector<LabelSequence> data;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("g2p data line " + std::to_string(line_no) +
                      ": missing tab separator");
    LabelSequence seq;
    seq.graphemes = split_graphemes(line.substr(0, tab));
    if (seq.graphemes.empty())
      throw DataError("g2p data line " + std::to_string(line_no) +
                      ": empty sentence");
    std::istringstream labels(line.substr(tab + 1));
    std::string tok;
    while (labels >> tok) {
      validate_label(unescape_label(tok), line_no);
      seq.labels.push_back(unescape_label(tok));
    }
    if (seq.labels.size() != seq.graphemes.size())
      throw DataError("g2p data line " + std::to_string(line_no) + ": " +
                      std::to_string(seq.graphemes.size()) + " graphemes but " +
                      std::to_string(seq.labels.size()) + " labels");
    data.push_back(std::move(seq));
  }
  return data;
}

inline void write_g2p_tsv(const std::string& path,
                          const std::vector<LabelSequence>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write g2p data file: " + path);
  for (const auto& seq : data) {
    for (const auto& g : seq.graphemes) out << g;
    out << '\t';
    for (size_t i = 0; i < seq.labels.size(); ++i) {
      if (i) out << ' ';
      out << escape_label(seq.labels[i]);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Tagger network.

struct G2PDims {
  int char_emb = 64;
  int conv_channels = 128;
  int conv_kernel = 5;
  int lstm_hidden = 128;
};

template <class Real>
struct G2PModel {
  std::vector<uint32_t> chars;   // codepoint of id i+1; id 0 is UNK
  std::vector<std::string> alphabet;
  G2PDims dims;

  nn::Embedding<Real> emb;
  nn::Conv1d<Real> conv1, conv2, conv3;
  nn::BiLstm<Real> lstm;
  nn::Linear<Real> proj;

  std::map<uint32_t, int> char_to_id;
  std::map<std::string, int> label_to_id;

  G2PModel(std::vector<uint32_t> chars_, std::vector<std::string> alphabet_,
           G2PDims d = {})
      : chars(std::move(chars_)),
        alphabet(std::move(alphabet_)),
        dims(d),
        emb(static_cast<int>(chars.size()) + 1, d.char_emb),
        conv1(d.char_emb, d.conv_channels, d.conv_kernel),
        conv2(d.conv_channels, d.conv_channels, d.conv_kernel),
        conv3(d.conv_channels, d.conv_channels, d.conv_kernel),
        lstm(d.conv_channels, d.lstm_hidden),
        proj(2 * d.lstm_hidden, static_cast<int>(alphabet.size())) {
    if (alphabet.empty()) throw DataError("G2PModel: empty label alphabet");
    for (size_t i = 0; i < chars.size(); ++i)
      char_to_id[chars[i]] = static_cast<int>(i) + 1;
    for (size_t i = 0; i < alphabet.size(); ++i)
      label_to_id[alphabet[i]] = static_cast<int>(i);
  }

  void init(std::mt19937& rng) {
    emb.init(rng);
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
    lstm.init(rng);
    proj.init(rng);
  }

  int char_id(uint32_t cp) const {
    auto it = char_to_id.find(cp);
    return it == char_to_id.end() ? 0 : it->second;
  }

  std::vector<int> encode_chars(const std::vector<std::string>& graphemes) const {
    std::vector<int> ids;
    ids.reserve(graphemes.size());
    for (const auto& g : graphemes) {
      auto cps = utf8_decode(g);
      if (cps.size() != 1)
        throw DataError("grapheme is not a single character: '" + g + "'");
      ids.push_back(char_id(cps[0]));
    }
    return ids;
  }

  std::vector<nn::ParamRef<Real>> params() {
    std::vector<nn::ParamRef<Real>> out;
    auto append = [&](std::vector<nn::ParamRef<Real>> p) {
      out.insert(out.end(), p.begin(), p.end());
    };
    append(emb.params("g2p.emb"));
    append(conv1.params("g2p.conv1"));
    append(conv2.params("g2p.conv2"));
    append(conv3.params("g2p.conv3"));
    append(lstm.params("g2p.lstm"));
    append(proj.params("g2p.proj"));
    return out;
  }

  struct Cache {
    nn::Tensor<Real> e, a1, a2, a3, bo;
    typename nn::BiLstm<Real>::Cache bi;
  };

  nn::Tensor<Real> forward_logits(const std::vector<int>& ids,
                                  Cache* cache) const {
    if (ids.empty()) throw DataError("g2p forward: empty input");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.e = emb.forward(ids);
    c.a1 = nn::tanh_forward(conv1.forward(c.e));
    c.a2 = nn::tanh_forward(conv2.forward(c.a1));
    c.a3 = nn::tanh_forward(conv3.forward(c.a2));
    c.bo = lstm.forward(c.a3, &c.bi);
    return proj.forward(c.bo);
  }

  void backward_logits(const std::vector<int>& ids, const Cache& cache,
                       const nn::Tensor<Real>& glogits) {
    auto gbo = proj.backward(cache.bo, glogits);
    auto ga3 = lstm.backward(cache.a3, cache.bi, gbo);
    auto gh3 = nn::tanh_backward(cache.a3, ga3);
    auto ga2 = conv3.backward(cache.a2, gh3);
    auto gh2 = nn::tanh_backward(cache.a2, ga2);
    auto ga1 = conv2.backward(cache.a1, gh2);
    auto gh1 = nn::tanh_backward(cache.a1, ga1);
    auto ge = conv1.backward(cache.e, gh1);
    emb.backward(ids, ge);
  }
};

// Per-grapheme label distributions, rows summing to 1.
template <class Real>
nn::Tensor<Real> g2p_forward(const G2PModel<Real>& model,
                             const std::vector<std::string>& graphemes) {
  auto logits = model.forward_logits(model.encode_chars(graphemes), nullptr);
  return nn::softmax_rows(logits);
}

using nn::argmax_row;

template <class Real>
std::vector<std::string> predict_labels(
    const G2PModel<Real>& model, const std::vector<std::string>& graphemes) {
  auto logits = model.forward_logits(model.encode_chars(graphemes), nullptr);
  std::vector<std::string> labels;
  labels.reserve(graphemes.size());
  for (int r = 0; r < logits.rows(); ++r)
    labels.push_back(model.alphabet[argmax_row(logits, r)]);
  return labels;
}

template <class Real>
std::vector<HybridToken> transcribe_tokens(const G2PModel<Real>& model,
                                           const std::string& sentence) {
  auto graphemes = split_graphemes(sentence);
  if (graphemes.empty()) return {};
  return decode_labels_tokens({graphemes, predict_labels(model, graphemes)});
}

template <class Real>
std::vector<std::string> transcribe(const G2PModel<Real>& model,
                                    const std::string& sentence) {
  std::vector<std::string> out;
  for (auto& tok : transcribe_tokens(model, sentence))
    out.push_back(std::move(tok.text));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation. Counts are integers so callers can compare exactly.

struct G2PEvalReport {
  double par = 0.0;
  double sar = 0.0;
  long n_sentences = 0;
  long n_labels = 0;
  long correct_labels = 0;
  long perfect_sentences = 0;
};

template <class Real>
G2PEvalReport evaluate_par_sar(const G2PModel<Real>& model,
                               const std::vector<LabelSequence>& dataset) {
  if (dataset.empty()) throw DataError("evaluate_par_sar: empty dataset");
  G2PEvalReport rep;
  for (const auto& seq : dataset) {
    auto predicted = predict_labels(model, seq.graphemes);
    bool perfect = true;
    for (size_t i = 0; i < seq.labels.size(); ++i) {
      ++rep.n_labels;
      if (predicted[i] == seq.labels[i])
        ++rep.correct_labels;
      else
        perfect = false;
    }
    ++rep.n_sentences;
    if (perfect) ++rep.perfect_sentences;
  }
  if (rep.n_labels == 0) throw DataError("evaluate_par_sar: no labels");
  rep.par = static_cast<double>(rep.correct_labels) / rep.n_labels;
  rep.sar = static_cast<double>(rep.perfect_sentences) / rep.n_sentences;
  return rep;
}

// ---------------------------------------------------------------------------
// Patience-based early stopping on a score to maximize. The retained
// index is the argmax of the observed trace, first occurrence on ties
// (improvement requires strictly greater).

struct EarlyStopper {
  int patience = 20;
  double best = -std::numeric_limits<double>::infinity();
  int best_index = -1;
  int streak = 0;
  bool last_improved = false;

  // Returns true when training should stop after this observation.
  bool observe(double score, int index) {
    if (score > best) {
      best = score;
      best_index = index;
      streak = 0;
      last_improved = true;
      return false;
    }
    last_improved = false;
    return ++streak >= patience;
  }
};

// ---------------------------------------------------------------------------
// Training.

struct G2PTrainConfig {
  G2PDims dims;
  int max_epochs = 500;
  int patience = 20;
  double lr = 1e-3;
  uint64_t seed = 1;
};

struct G2PEpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_par = 0.0;
  double valid_sar = 0.0;
};

inline void build_vocab(const std::vector<LabelSequence>& train,
                        std::vector<uint32_t>* chars,
                        std::vector<std::string>* alphabet) {
  std::set<uint32_t> cset;
  std::set<std::string> lset;
  for (const auto& seq : train) {
    for (const auto& g : seq.graphemes)
      for (uint32_t cp : utf8_decode(g)) cset.insert(cp);
    for (const auto& l : seq.labels) lset.insert(l);
  }
  chars->assign(cset.begin(), cset.end());
  alphabet->assign(lset.begin(), lset.end());
}

template <class Real = float>
G2PModel<Real> g2p_train(const std::vector<LabelSequence>& train,
                         const std::vector<LabelSequence>& valid,
                         const G2PTrainConfig& cfg,
                         std::vector<G2PEpochLog>* log = nullptr) {
  if (train.empty()) throw DataError("g2p_train: empty training set");
  if (valid.empty()) throw DataError("g2p_train: empty validation set");

  std::vector<uint32_t> chars;
  std::vector<std::string> alphabet;
  build_vocab(train, &chars, &alphabet);

  G2PModel<Real> model(chars, alphabet, cfg.dims);
  std::mt19937 rng(static_cast<uint32_t>(cfg.seed));
  model.init(rng);
  auto params = model.params();
  nn::Adam<Real> adam(params);

  EarlyStopper stopper;
  stopper.patience = cfg.patience;
  std::vector<std::vector<Real>> best;

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (size_t idx : order) {
      const auto& seq = train[idx];
      auto ids = model.encode_chars(seq.graphemes);
      std::vector<int> gold;
      gold.reserve(seq.labels.size());
      for (const auto& l : seq.labels) {
        auto it = model.label_to_id.find(l);
        if (it == model.label_to_id.end())
          throw DataError("g2p_train: label not in alphabet: '" + l + "'");
        gold.push_back(it->second);
      }
      typename G2PModel<Real>::Cache cache;
      auto logits = model.forward_logits(ids, &cache);
      nn::Tensor<Real> glogits(logits.shape);
      double loss = nn::softmax_cross_entropy(logits, gold, &glogits);
      if (!std::isfinite(loss))
        throw NumericError("g2p_train: non-finite loss at epoch " +
                           std::to_string(epoch));
      epoch_loss += loss;
      nn::zero_grads(params);
      model.backward_logits(ids, cache, glogits);
      adam.step(params, cfg.lr);
    }

    auto report = evaluate_par_sar(model, valid);
    bool stop = stopper.observe(report.sar, epoch);
    if (stopper.last_improved) best = nn::snapshot_params(params);
    if (log)
      log->push_back({epoch, epoch_loss / static_cast<double>(train.size()),
                      report.par, report.sar});
    if (stop) break;
  }

  if (!best.empty()) nn::restore_params(params, best);
  return model;
}

// ---------------------------------------------------------------------------
// Persistence: tensor checkpoint plus a text sidecar holding the
// character vocabulary (codepoints), label alphabet and dimensions.

template <class Real>
void save_g2p(const std::string& path, G2PModel<Real>& model) {
  nn::save_checkpoint(path, model.params());
  std::ofstream out(path + ".vocab", std::ios::binary);
  if (!out) throw DataError("cannot write vocab file: " + path + ".vocab");
  out << "g2pvocab 1\n";
  out << "dims " << model.dims.char_emb << ' ' << model.dims.conv_channels
      << ' ' << model.dims.conv_kernel << ' ' << model.dims.lstm_hidden << '\n';
  out << "chars " << model.chars.size() << '\n';
  for (uint32_t cp : model.chars) out << cp << '\n';
  out << "labels " << model.alphabet.size() << '\n';
  for (const auto& l : model.alphabet) out << escape_label(l) << '\n';
  if (!out) throw DataError("write failed: " + path + ".vocab");
}

inline G2PModel<float> load_g2p(const std::string& path) {
  std::ifstream in(path + ".vocab", std::ios::binary);
  if (!in) throw DataError("cannot open vocab file: " + path + ".vocab");
  auto fail = [&](const std::string& why) {
    throw DataError("bad vocab file " + path + ".vocab: " + why);
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "g2pvocab" || version != 1)
    fail("expected 'g2pvocab 1' header");
  G2PDims dims;
  if (!(in >> word >> dims.char_emb >> dims.conv_channels >> dims.conv_kernel >>
        dims.lstm_hidden) ||
      word != "dims")
    fail("expected dims line");
  size_t n_chars = 0;
  if (!(in >> word >> n_chars) || word != "chars") fail("expected chars line");
  std::vector<uint32_t> chars(n_chars);
  for (auto& cp : chars)
    if (!(in >> cp)) fail("truncated character list");
  size_t n_labels = 0;
  if (!(in >> word >> n_labels) || word != "labels")
    fail("expected labels line");
  std::vector<std::string> alphabet(n_labels);
  for (auto& l : alphabet) {
    if (!(in >> l)) fail("truncated label list");
    l = unescape_label(l);
  }
  G2PModel<float> model(chars, alphabet, dims);
  nn::load_checkpoint(path, model.params());
  return model;
}

}  // namespace ttsfront::g2p
