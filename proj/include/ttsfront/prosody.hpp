#pragma once

// Prosody network: a shared conv+BiLSTM backbone over phoneme and
// speaker embeddings, concatenated with word vectors upsampled from
// word level to phoneme level, feeding three parallel BiLSTM stacks.
// The duration stack reads the phoneme-level sequence; the pitch and
// conditioning stacks read the frame-level sequence produced by a
// second, non-uniform upsampling (regulate_length) driven by gold
// durations in training and predicted durations at inference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/nn/checkpoint.hpp"
#include "ttsfront/nn/gradcheck.hpp"
#include "ttsfront/nn/layers.hpp"
#include "ttsfront/nn/losses.hpp"
#include "ttsfront/nn/lstm.hpp"
#include "ttsfront/nn/optim.hpp"

namespace ttsfront::prosody {

// ---------------------------------------------------------------------------
// The two upsampling layers.

// Word level -> phoneme level: phoneme i receives the vector of its
// word; phonemes belonging to no word (punctuation, silence) receive
// the zero vector.
template <class Real>
nn::Tensor<Real> upsample_words_to_phonemes(
    const nn::Tensor<Real>& word_vecs,
    const std::vector<int>& word_of_phoneme) {
  nn::Tensor<Real> out(
      {static_cast<int>(word_of_phoneme.size()), word_vecs.cols()});
  for (size_t i = 0; i < word_of_phoneme.size(); ++i) {
    int w = word_of_phoneme[i];
    if (w < 0) continue;
    if (w >= word_vecs.rows())
      throw DataError("upsample_words_to_phonemes: word index " +
                      std::to_string(w) + " out of range for " +
                      std::to_string(word_vecs.rows()) + " words");
    const Real* src = word_vecs.row(w);
    std::copy(src, src + word_vecs.cols(), out.row(static_cast<int>(i)));
  }
  return out;
}

// Frame t -> owning phoneme. Length equals the duration sum.
inline std::vector<int> build_index(const std::vector<int>& durations) {
  long total = 0;
  for (int d : durations) {
    if (d < 0) throw DataError("build_index: negative duration");
    total += d;
  }
  std::vector<int> index;
  index.reserve(static_cast<size_t>(total));
  for (size_t p = 0; p < durations.size(); ++p)
    for (int k = 0; k < durations[p]; ++k)
      index.push_back(static_cast<int>(p));
  return index;
}

// Phoneme level -> frame level by gathering rows; equals the naive
// repeat-and-concatenate construction bitwise.
template <class Real>
nn::Tensor<Real> regulate_length(const nn::Tensor<Real>& phoneme_vecs,
                                 const std::vector<int>& index) {
  nn::Tensor<Real> out({static_cast<int>(index.size()), phoneme_vecs.cols()});
  for (size_t t = 0; t < index.size(); ++t) {
    if (index[t] < 0 || index[t] >= phoneme_vecs.rows())
      throw DataError("regulate_length: index out of range");
    const Real* src = phoneme_vecs.row(index[t]);
    std::copy(src, src + phoneme_vecs.cols(), out.row(static_cast<int>(t)));
  }
  return out;
}

// Scatter-add of frame gradients back onto phonemes.
template <class Real>
nn::Tensor<Real> regulate_length_backward(const nn::Tensor<Real>& gout,
                                          const std::vector<int>& index,
                                          int n_phonemes) {
  nn::Tensor<Real> gin({n_phonemes, gout.cols()});
  for (size_t t = 0; t < index.size(); ++t) {
    Real* dst = gin.row(index[t]);
    const Real* src = gout.row(static_cast<int>(t));
    for (int d = 0; d < gout.cols(); ++d) dst[d] += src[d];
  }
  return gin;
}

// ---------------------------------------------------------------------------
// Model.

struct ProsodyDims {
  int phoneme_emb = 64;
  int speaker_emb = 32;
  int conv_channels = 128;
  int conv_kernel = 5;
  int lstm_hidden = 128;  // per direction, backbone and all three stacks
  int d_max = 100;        // duration classes 0..d_max (softmax over d_max+1)
  int d_cond = 80;
  int d_w = 768;          // word-embedding width
};

// Features of one utterance, forced-aligned: the duration sum equals
// the pitch/mel frame count.
template <class Real>
struct ProsodyBatch {
  std::string id;
  std::vector<int> phoneme_ids;
  std::vector<int> word_of_phoneme;  // -1 where the phoneme has no word
  nn::Tensor<Real> word_vecs;        // n_words x d_w
  int speaker_id = 0;
  std::vector<int> gold_durations;   // frames per phoneme
  std::vector<Real> gold_f0;         // normalized log-f0 per frame, 0 unvoiced
  std::vector<uint8_t> gold_voiced;  // per frame
  nn::Tensor<Real> gold_mel;         // T x d_cond

  long total_frames() const {
    long total = 0;
    for (int d : gold_durations) total += d;
    return total;
  }
};

template <class Real>
void validate_batch(const ProsodyBatch<Real>& batch, const ProsodyDims& dims) {
  auto fail = [&](const std::string& why) {
    throw DataError("batch '" + batch.id + "': " + why);
  };
  if (batch.phoneme_ids.empty()) fail("no phonemes");
  if (batch.word_of_phoneme.size() != batch.phoneme_ids.size())
    fail("word_of_phoneme length mismatch");
  if (batch.gold_durations.size() != batch.phoneme_ids.size())
    fail("gold_durations length mismatch");
  long T = batch.total_frames();
  if (static_cast<long>(batch.gold_f0.size()) != T ||
      static_cast<long>(batch.gold_voiced.size()) != T ||
      static_cast<long>(batch.gold_mel.rows()) != T)
    fail("duration sum " + std::to_string(T) +
         " disagrees with frame features (f0 " +
         std::to_string(batch.gold_f0.size()) + ", voiced " +
         std::to_string(batch.gold_voiced.size()) + ", mel " +
         std::to_string(batch.gold_mel.rows()) + ")");
  if (batch.gold_mel.cols() != dims.d_cond) fail("mel width mismatch");
  if (batch.word_vecs.rows() > 0 && batch.word_vecs.cols() != dims.d_w)
    fail("word vector width mismatch");
}

template <class Real>
struct ProsodyOutput {
  nn::Tensor<Real> dur_logits;  // n x (d_max+1)
  nn::Tensor<Real> dur_probs;   // softmax of the above
  nn::Tensor<Real> pitch;       // T x 2: normalized log-f0, voicing logit
  std::vector<Real> vuv_prob;   // sigmoid of the voicing logit
  nn::Tensor<Real> cond;        // T x d_cond
};

template <class Real>
struct ProsodyModel {
  ProsodyDims dims;
  std::vector<std::string> phonemes;  // id i+1; id 0 is UNK
  std::vector<std::string> speakers;  // id = index

  nn::Embedding<Real> phon_emb, spk_emb;
  nn::Conv1d<Real> conv1, conv2, conv3;
  nn::BiLstm<Real> backbone;
  nn::BiLstm<Real> dur_lstm;
  nn::Linear<Real> dur_proj;
  nn::BiLstm<Real> pitch_lstm;
  nn::Linear<Real> pitch_proj;
  nn::BiLstm<Real> cond_lstm;
  nn::Linear<Real> cond_proj;

  std::map<std::string, int> phoneme_to_id;
  std::map<std::string, int> speaker_to_id;

  ProsodyModel(std::vector<std::string> phonemes_,
               std::vector<std::string> speakers_, ProsodyDims d = {})
      : dims(d),
        phonemes(std::move(phonemes_)),
        speakers(std::move(speakers_)),
        phon_emb(static_cast<int>(phonemes.size()) + 1, d.phoneme_emb),
        spk_emb(static_cast<int>(speakers.size()), d.speaker_emb),
        conv1(d.phoneme_emb + d.speaker_emb, d.conv_channels, d.conv_kernel),
        conv2(d.conv_channels, d.conv_channels, d.conv_kernel),
        conv3(d.conv_channels, d.conv_channels, d.conv_kernel),
        backbone(d.conv_channels, d.lstm_hidden),
        dur_lstm(2 * d.lstm_hidden + d.d_w, d.lstm_hidden),
        dur_proj(2 * d.lstm_hidden, d.d_max + 1),
        pitch_lstm(2 * d.lstm_hidden + d.d_w, d.lstm_hidden),
        pitch_proj(2 * d.lstm_hidden, 2),
        cond_lstm(2 * d.lstm_hidden + d.d_w, d.lstm_hidden),
        cond_proj(2 * d.lstm_hidden, d.d_cond) {
    if (speakers.empty()) throw DataError("ProsodyModel: no speakers");
    for (size_t i = 0; i < phonemes.size(); ++i)
      phoneme_to_id[phonemes[i]] = static_cast<int>(i) + 1;
    for (size_t i = 0; i < speakers.size(); ++i)
      speaker_to_id[speakers[i]] = static_cast<int>(i);
  }

  void init(std::mt19937& rng) {
    phon_emb.init(rng);
    spk_emb.init(rng);
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
    backbone.init(rng);
    dur_lstm.init(rng);
    dur_proj.init(rng);
    pitch_lstm.init(rng);
    pitch_proj.init(rng);
    cond_lstm.init(rng);
    cond_proj.init(rng);
  }

  int phoneme_id(const std::string& p) const {
    auto it = phoneme_to_id.find(p);
    return it == phoneme_to_id.end() ? 0 : it->second;
  }

  std::vector<int> encode_phonemes(const std::vector<std::string>& seq) const {
    std::vector<int> ids;
    ids.reserve(seq.size());
    for (const auto& p : seq) ids.push_back(phoneme_id(p));
    return ids;
  }

  std::vector<nn::ParamRef<Real>> params() {
    std::vector<nn::ParamRef<Real>> out;
    auto append = [&](std::vector<nn::ParamRef<Real>> p) {
      out.insert(out.end(), p.begin(), p.end());
    };
    append(phon_emb.params("prosody.phon_emb"));
    append(spk_emb.params("prosody.spk_emb"));
    append(conv1.params("prosody.conv1"));
    append(conv2.params("prosody.conv2"));
    append(conv3.params("prosody.conv3"));
    append(backbone.params("prosody.backbone"));
    append(dur_lstm.params("prosody.dur_lstm"));
    append(dur_proj.params("prosody.dur_proj"));
    append(pitch_lstm.params("prosody.pitch_lstm"));
    append(pitch_proj.params("prosody.pitch_proj"));
    append(cond_lstm.params("prosody.cond_lstm"));
    append(cond_proj.params("prosody.cond_proj"));
    return out;
  }

  struct Cache {
    std::vector<int> ids, spk_ids, index;
    nn::Tensor<Real> x0, a1, a2, a3, bb, wp, ph, dl, fr, pl, cl;
    typename nn::BiLstm<Real>::Cache bb_c, dur_c, pitch_c, cond_c;
  };
};

// ---------------------------------------------------------------------------
// Forward, in two stages so inference can insert predicted durations
// between them.

// Phoneme-level pass: embeddings, backbone, word upsampling, duration
// head. Fills the cache through `ph` and returns duration logits.
template <class Real>
nn::Tensor<Real> stage_phoneme(const ProsodyModel<Real>& m,
                               const std::vector<int>& phoneme_ids,
                               const std::vector<int>& word_of_phoneme,
                               const nn::Tensor<Real>& word_vecs,
                               int speaker_id,
                               typename ProsodyModel<Real>::Cache& c) {
  if (phoneme_ids.empty())
    throw DataError("prosody forward: empty phoneme sequence");
  if (word_of_phoneme.size() != phoneme_ids.size())
    throw DataError("prosody forward: word_of_phoneme length mismatch");
  if (speaker_id < 0 || speaker_id >= static_cast<int>(m.speakers.size()))
    throw DataError("prosody forward: speaker id " +
                    std::to_string(speaker_id) + " out of range");
  c.ids = phoneme_ids;
  c.spk_ids.assign(phoneme_ids.size(), speaker_id);
  auto pe = m.phon_emb.forward(c.ids);
  auto se = m.spk_emb.forward(c.spk_ids);
  c.x0 = nn::concat_cols(pe, se);
  c.a1 = nn::tanh_forward(m.conv1.forward(c.x0));
  c.a2 = nn::tanh_forward(m.conv2.forward(c.a1));
  c.a3 = nn::tanh_forward(m.conv3.forward(c.a2));
  c.bb = m.backbone.forward(c.a3, &c.bb_c);
  c.wp = upsample_words_to_phonemes(word_vecs, word_of_phoneme);
  c.ph = nn::concat_cols(c.bb, c.wp);
  c.dl = m.dur_lstm.forward(c.ph, &c.dur_c);
  return m.dur_proj.forward(c.dl);
}

// Frame-level pass over regulate_length(ph, index(durations)).
template <class Real>
void stage_frames(const ProsodyModel<Real>& m,
                  const std::vector<int>& durations,
                  typename ProsodyModel<Real>::Cache& c,
                  nn::Tensor<Real>* pitch_out, nn::Tensor<Real>* cond_out) {
  if (durations.size() != c.ids.size())
    throw DataError("prosody forward: one duration per phoneme required");
  c.index = build_index(durations);
  c.fr = regulate_length(c.ph, c.index);
  c.pl = m.pitch_lstm.forward(c.fr, &c.pitch_c);
  *pitch_out = m.pitch_proj.forward(c.pl);
  c.cl = m.cond_lstm.forward(c.fr, &c.cond_c);
  *cond_out = m.cond_proj.forward(c.cl);
}

template <class Real>
ProsodyOutput<Real> forward_with_durations(
    const ProsodyModel<Real>& m, const std::vector<int>& phoneme_ids,
    const std::vector<int>& word_of_phoneme,
    const nn::Tensor<Real>& word_vecs, int speaker_id,
    const std::vector<int>& durations,
    typename ProsodyModel<Real>::Cache& c) {
  ProsodyOutput<Real> out;
  out.dur_logits =
      stage_phoneme(m, phoneme_ids, word_of_phoneme, word_vecs, speaker_id, c);
  out.dur_probs = nn::softmax_rows(out.dur_logits);
  stage_frames(m, durations, c, &out.pitch, &out.cond);
  out.vuv_prob.resize(static_cast<size_t>(out.pitch.rows()));
  for (int t = 0; t < out.pitch.rows(); ++t)
    out.vuv_prob[t] = nn::sigmoid_scalar(out.pitch.row(t)[1]);
  return out;
}

// Training-time forward: frame stacks run on GOLD durations.
template <class Real>
ProsodyOutput<Real> forward_forced(const ProsodyModel<Real>& m,
                                   const ProsodyBatch<Real>& batch,
                                   typename ProsodyModel<Real>::Cache* cache) {
  validate_batch(batch, m.dims);
  typename ProsodyModel<Real>::Cache local;
  auto& c = cache ? *cache : local;
  return forward_with_durations(m, batch.phoneme_ids, batch.word_of_phoneme,
                                batch.word_vecs, batch.speaker_id,
                                batch.gold_durations, c);
}

// ---------------------------------------------------------------------------
// Losses. Word vectors are inputs, not parameters; their gradient is
// discarded in backward().

struct Losses {
  double dur = 0.0, f0 = 0.0, vuv = 0.0, cond = 0.0, total = 0.0;
};

template <class Real>
struct LossGrads {
  nn::Tensor<Real> dur_logits;  // n x (d_max+1)
  nn::Tensor<Real> pitch;       // T x 2
  nn::Tensor<Real> cond;        // T x d_cond
};

template <class Real>
Losses compute_losses(const ProsodyOutput<Real>& out,
                      const ProsodyBatch<Real>& batch, const ProsodyDims& dims,
                      LossGrads<Real>* grads) {
  if (grads) {
    grads->dur_logits.resize(out.dur_logits.shape);
    grads->pitch.resize(out.pitch.shape);
    grads->cond.resize(out.cond.shape);
  }
  Losses L;

  std::vector<int> gold_cls;
  gold_cls.reserve(batch.gold_durations.size());
  for (int d : batch.gold_durations) gold_cls.push_back(std::min(d, dims.d_max));
  L.dur = nn::softmax_cross_entropy(out.dur_logits, gold_cls,
                                    grads ? &grads->dur_logits : nullptr);

  std::vector<bool> mask(batch.gold_voiced.begin(), batch.gold_voiced.end());
  L.f0 = nn::mse_masked_column(out.pitch, 0, batch.gold_f0, mask,
                               grads ? &grads->pitch : nullptr);

  int T = out.pitch.rows();
  nn::Tensor<Real> vuv_logits({T});
  std::vector<Real> vuv_targets(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    vuv_logits.data[t] = out.pitch.row(t)[1];
    vuv_targets[t] = static_cast<Real>(batch.gold_voiced[t]);
  }
  if (T > 0) {
    nn::Tensor<Real> gv({T});
    L.vuv = nn::sigmoid_bce(vuv_logits, vuv_targets, grads ? &gv : nullptr);
    if (grads)
      for (int t = 0; t < T; ++t) grads->pitch.row(t)[1] += gv.data[t];
  }

  L.cond = nn::l1(out.cond, batch.gold_mel, grads ? &grads->cond : nullptr);
  L.total = L.dur + L.f0 + L.vuv + L.cond;
  return L;
}

template <class Real>
void backward(ProsodyModel<Real>& m, const typename ProsodyModel<Real>::Cache& c,
              const LossGrads<Real>& grads) {
  auto gpl = m.pitch_proj.backward(c.pl, grads.pitch);
  auto gfr = m.pitch_lstm.backward(c.fr, c.pitch_c, gpl);
  auto gcl = m.cond_proj.backward(c.cl, grads.cond);
  auto gfr_c = m.cond_lstm.backward(c.fr, c.cond_c, gcl);
  for (size_t i = 0; i < gfr.size(); ++i) gfr.data[i] += gfr_c.data[i];

  auto gph = regulate_length_backward(gfr, c.index, c.ph.rows());
  auto gdl = m.dur_proj.backward(c.dl, grads.dur_logits);
  auto gph_d = m.dur_lstm.backward(c.ph, c.dur_c, gdl);
  for (size_t i = 0; i < gph.size(); ++i) gph.data[i] += gph_d.data[i];

  nn::Tensor<Real> gbb({c.bb.rows(), c.bb.cols()});
  nn::Tensor<Real> gwp({c.wp.rows(), c.wp.cols()});  // discarded: inputs
  nn::split_cols_backward(gph, &gbb, &gwp);

  auto ga3 = m.backbone.backward(c.a3, c.bb_c, gbb);
  auto gh3 = nn::tanh_backward(c.a3, ga3);
  auto ga2 = m.conv3.backward(c.a2, gh3);
  auto gh2 = nn::tanh_backward(c.a2, ga2);
  auto ga1 = m.conv2.backward(c.a1, gh2);
  auto gh1 = nn::tanh_backward(c.a1, ga1);
  auto gx0 = m.conv1.backward(c.x0, gh1);

  nn::Tensor<Real> gpe({c.x0.rows(), m.dims.phoneme_emb});
  nn::Tensor<Real> gse({c.x0.rows(), m.dims.speaker_emb});
  nn::split_cols_backward(gx0, &gpe, &gse);
  m.phon_emb.backward(c.ids, gpe);
  m.spk_emb.backward(c.spk_ids, gse);
}

// ---------------------------------------------------------------------------
// Inference.

template <class Real>
struct InferResult {
  ProsodyOutput<Real> out;
  std::vector<int> durations;   // argmax class, ties to the smaller duration
  std::vector<Real> f0_norm;    // per frame, 0 where unvoiced
  std::vector<uint8_t> voiced;  // vuv probability > 0.5
};

template <class Real>
InferResult<Real> infer(const ProsodyModel<Real>& m,
                        const std::vector<int>& phoneme_ids,
                        const std::vector<int>& word_of_phoneme,
                        const nn::Tensor<Real>& word_vecs, int speaker_id) {
  typename ProsodyModel<Real>::Cache c;
  InferResult<Real> res;
  res.out.dur_logits =
      stage_phoneme(m, phoneme_ids, word_of_phoneme, word_vecs, speaker_id, c);
  res.out.dur_probs = nn::softmax_rows(res.out.dur_logits);
  res.durations.reserve(phoneme_ids.size());
  for (int r = 0; r < res.out.dur_logits.rows(); ++r)
    res.durations.push_back(nn::argmax_row(res.out.dur_logits, r));
  stage_frames(m, res.durations, c, &res.out.pitch, &res.out.cond);

  int T = res.out.pitch.rows();
  res.out.vuv_prob.resize(static_cast<size_t>(T));
  res.f0_norm.resize(static_cast<size_t>(T), Real(0));
  res.voiced.resize(static_cast<size_t>(T), 0);
  for (int t = 0; t < T; ++t) {
    Real p = nn::sigmoid_scalar(res.out.pitch.row(t)[1]);
    res.out.vuv_prob[t] = p;
    if (p > Real(0.5)) {
      res.voiced[t] = 1;
      res.f0_norm[t] = res.out.pitch.row(t)[0];
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Gradient pre-flight: a miniature double-precision instance of the
// full network must pass the finite-difference check before training
// is allowed to start.

inline void gradient_preflight() {
  ProsodyDims dims;
  dims.phoneme_emb = 4;
  dims.speaker_emb = 3;
  dims.conv_channels = 6;
  dims.conv_kernel = 3;
  dims.lstm_hidden = 4;
  dims.d_max = 5;
  dims.d_cond = 3;
  dims.d_w = 4;
  ProsodyModel<double> m({"a", "b", "c"}, {"spk"}, dims);
  std::mt19937 rng(42);
  m.init(rng);

  ProsodyBatch<double> batch;
  batch.id = "preflight";
  batch.phoneme_ids = {1, 2, 3, 0};
  batch.word_of_phoneme = {0, 0, -1, 1};
  batch.word_vecs.resize({2, dims.d_w});
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : batch.word_vecs.data) v = dist(rng);
  batch.speaker_id = 0;
  batch.gold_durations = {2, 0, 1, 3};
  long T = batch.total_frames();
  batch.gold_mel.resize({static_cast<int>(T), dims.d_cond});
  for (auto& v : batch.gold_mel.data) v = dist(rng);
  for (long t = 0; t < T; ++t) {
    batch.gold_voiced.push_back(t % 2 == 0);
    batch.gold_f0.push_back(batch.gold_voiced.back() ? dist(rng) : 0.0);
  }

  auto params = m.params();
  auto report = nn::gradient_check<double>(
      params,
      [&] {
        auto out = forward_forced<double>(m, batch, nullptr);
        return compute_losses<double>(out, batch, dims, nullptr).total;
      },
      [&] {
        nn::zero_grads(params);
        typename ProsodyModel<double>::Cache cache;
        auto out = forward_forced<double>(m, batch, &cache);
        LossGrads<double> grads;
        compute_losses<double>(out, batch, dims, &grads);
        backward<double>(m, cache, grads);
      });
  if (!report.ok)
    throw NumericError("gradient pre-flight failed: " + report.describe());
}

// ---------------------------------------------------------------------------
// Training: Adam with the inverse-time learning-rate schedule. No
// model selection; the final state is the result.

struct ProsodyTrainConfig {
  long max_steps = 20000;
  int batch_size = 16;
  nn::LrSchedule schedule;  // lr0 2e-4, decay 1e-5
  uint64_t seed = 1;
  bool run_preflight = true;
};

struct ProsodyStepLog {
  long step = 0;
  double lr = 0.0;
  Losses losses;  // mean over the step's batch
};

template <class Real = float>
std::vector<ProsodyStepLog> prosody_train(
    ProsodyModel<Real>& model, const std::vector<ProsodyBatch<Real>>& data,
    const ProsodyTrainConfig& cfg) {
  if (data.empty()) throw DataError("prosody_train: no training utterances");
  for (const auto& batch : data) validate_batch(batch, model.dims);
  if (cfg.run_preflight) gradient_preflight();

  auto params = model.params();
  nn::Adam<Real> adam(params);
  std::mt19937 rng(static_cast<uint32_t>(cfg.seed));
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  size_t cursor = 0;

  std::vector<ProsodyStepLog> log;
  log.reserve(static_cast<size_t>(cfg.max_steps));
  for (long step = 0; step < cfg.max_steps; ++step) {
    nn::zero_grads(params);
    Losses mean;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const auto& batch = data[order[cursor++]];
      typename ProsodyModel<Real>::Cache cache;
      auto out = forward_forced(model, batch, &cache);
      LossGrads<Real> grads;
      auto L = compute_losses(out, batch, model.dims, &grads);
      if (!std::isfinite(L.total))
        throw NumericError("prosody_train: non-finite loss at step " +
                           std::to_string(step) + " on '" + batch.id + "'");
      mean.dur += L.dur;
      mean.f0 += L.f0;
      mean.vuv += L.vuv;
      mean.cond += L.cond;
      mean.total += L.total;
      backward(model, cache, grads);
    }
    for (auto& p : params)
      for (auto& g : p.tensor->grad) g /= static_cast<Real>(cfg.batch_size);
    double lr = nn::lr_at(cfg.schedule, step);
    adam.step(params, lr);
    double inv = 1.0 / cfg.batch_size;
    mean.dur *= inv;
    mean.f0 *= inv;
    mean.vuv *= inv;
    mean.cond *= inv;
    mean.total *= inv;
    log.push_back({step, lr, mean});
  }
  return log;
}

// ---------------------------------------------------------------------------
// Persistence: tensor checkpoint plus a text sidecar with dimensions,
// phoneme vocabulary and speaker list.

template <class Real>
void save_prosody(const std::string& path, ProsodyModel<Real>& model) {
  nn::save_checkpoint(path, model.params());
  std::ofstream out(path + ".vocab", std::ios::binary);
  if (!out) throw DataError("cannot write vocab file: " + path + ".vocab");
  const auto& d = model.dims;
  out << "prosodyvocab 1\n";
  out << "dims " << d.phoneme_emb << ' ' << d.speaker_emb << ' '
      << d.conv_channels << ' ' << d.conv_kernel << ' ' << d.lstm_hidden << ' '
      << d.d_max << ' ' << d.d_cond << ' ' << d.d_w << '\n';
  out << "phonemes " << model.phonemes.size() << '\n';
  for (const auto& p : model.phonemes) out << escape_token(p) << '\n';
  out << "speakers " << model.speakers.size() << '\n';
  for (const auto& s : model.speakers) out << escape_token(s) << '\n';
  if (!out) throw DataError("write failed: " + path + ".vocab");
}

inline ProsodyModel<float> load_prosody(const std::string& path) {
  std::ifstream in(path + ".vocab", std::ios::binary);
  if (!in) throw DataError("cannot open vocab file: " + path + ".vocab");
  auto fail = [&](const std::string& why) {
    throw DataError("bad vocab file " + path + ".vocab: " + why);
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "prosodyvocab" || version != 1)
    fail("expected 'prosodyvocab 1' header");
  ProsodyDims d;
  if (!(in >> word >> d.phoneme_emb >> d.speaker_emb >> d.conv_channels >>
        d.conv_kernel >> d.lstm_hidden >> d.d_max >> d.d_cond >> d.d_w) ||
      word != "dims")
    fail("expected dims line");
  size_t n_phonemes = 0;
  if (!(in >> word >> n_phonemes) || word != "phonemes")
    fail("expected phonemes line");
  std::vector<std::string> phonemes(n_phonemes);
  for (auto& p : phonemes) {
    if (!(in >> p)) fail("truncated phoneme list");
    p = unescape_token(p);
  }
  size_t n_speakers = 0;
  if (!(in >> word >> n_speakers) || word != "speakers")
    fail("expected speakers line");
  std::vector<std::string> speakers(n_speakers);
  for (auto& s : speakers) {
    if (!(in >> s)) fail("truncated speaker list");
    s = unescape_token(s);
  }
  ProsodyModel<float> model(phonemes, speakers, d);
  nn::load_checkpoint(path, model.params());
  return model;
}

}  // namespace ttsfront::prosody
