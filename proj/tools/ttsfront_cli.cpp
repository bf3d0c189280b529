// Command-line front end for the pipeline: corpus import, feature
// extraction, model training and synthesis. Exit codes: 0 success,
// 1 usage error, 2 data/format error, 3 numeric failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ttsfront/config.hpp"
#include "ttsfront/corpus.hpp"
#include "ttsfront/features.hpp"
#include "ttsfront/g2p.hpp"
#include "ttsfront/pitch.hpp"
#include "ttsfront/prosody.hpp"
#include "ttsfront/vocoder.hpp"
#include "ttsfront/wav.hpp"
#include "ttsfront/wordvec.hpp"

namespace fs = std::filesystem;
using namespace ttsfront;

namespace {

fs::path resolve_path(const fs::path& base, const std::string& p) {
  fs::path fp(p);
  return fp.is_absolute() ? fp : base / fp;
}

// Loaded configuration plus its directory: relative paths in the file
// resolve against the file's location, not the working directory.
struct Pipeline {
  config::PipelineConfig cfg;
  fs::path base;

  fs::path manifest() const { return resolve_path(base, cfg.paths.manifest); }
  fs::path pitch_dir() const { return resolve_path(base, cfg.paths.pitch_dir); }
  fs::path mel_dir() const { return resolve_path(base, cfg.paths.mel_dir); }
  fs::path wordvec_dir() const {
    return resolve_path(base, cfg.paths.wordvec_dir);
  }
  fs::path checkpoint_dir() const {
    return resolve_path(base, cfg.paths.checkpoint_dir);
  }
  fs::path log_dir() const { return resolve_path(base, cfg.paths.log_dir); }
  int sample_rate() const {
    return static_cast<int>(std::lround(cfg.mel.sample_rate));
  }
};

Pipeline load_pipeline(const std::string& config_flag) {
  std::string path = config::resolve_config_path(config_flag);
  Pipeline p;
  p.cfg = config::read_config(path);
  p.base = fs::absolute(fs::path(path)).parent_path();
  return p;
}

// Runs fn(i) for i in [0, n). With jobs > 1, worker threads pull
// indices from a shared counter; the first exception wins and is
// rethrown after all workers stop.
void parallel_for(int jobs, size_t n, const std::function<void(size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  int n_threads = std::min<size_t>(static_cast<size_t>(jobs), n);
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

wav::Audio read_audio_checked(const std::string& path, int expected_rate) {
  wav::Audio audio = wav::read(path);
  if (audio.sample_rate != expected_rate)
    throw DataError(path + ": sample rate " +
                    std::to_string(audio.sample_rate) + " but config says " +
                    std::to_string(expected_rate));
  return audio;
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += escape_token(toks[i]);
  }
  return out;
}

// Per-frame energy for the debug vocoder: geometric mean of the mel
// magnitudes, i.e. exp of the mean log-mel row.
std::vector<float> frame_energy(const nn::Tensor<float>& mel) {
  std::vector<float> energy(static_cast<size_t>(mel.rows()));
  for (int t = 0; t < mel.rows(); ++t) {
    double sum = 0.0;
    for (int d = 0; d < mel.cols(); ++d) sum += mel.row(t)[d];
    energy[static_cast<size_t>(t)] =
        static_cast<float>(std::exp(sum / std::max(1, mel.cols())));
  }
  return energy;
}

// ---------------------------------------------------------------------------
// init

void run_init(const std::string& config_flag, bool force) {
  std::string path = config::resolve_config_path(config_flag);
  if (fs::exists(path) && !force) {
    try {
      config::read_config(path);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) +
                      " (pass --force to overwrite with defaults)");
    }
    std::cout << "config already present: " << path << "\n";
  } else {
    config::PipelineConfig cfg;
    config::write_config(path, cfg);
    std::cout << "wrote " << path << "\n";
  }
  Pipeline p = load_pipeline(config_flag);
  for (const fs::path& dir : {p.pitch_dir(), p.mel_dir(), p.wordvec_dir(),
                              p.checkpoint_dir(), p.log_dir()})
    fs::create_directories(dir);
}

// ---------------------------------------------------------------------------
// import

void run_import(const std::string& config_flag, const std::string& dump_path) {
  Pipeline p = load_pipeline(config_flag);
  auto corp = corpus::load_corpus(p.manifest().string());
  double total_s = 0.0;
  long total_segments = 0;
  for (const auto& u : corp.utterances) {
    total_s += u.span_s();
    total_segments += static_cast<long>(u.segments.size());
  }
  auto phonemes = features::collect_phonemes(corp);
  std::cout << "utterances: " << corp.utterances.size()
            << "\nspeakers: " << corp.speakers.size()
            << "\nphoneme inventory: " << phonemes.size()
            << "\nphoneme segments: " << total_segments
            << "\naligned audio: " << total_s << " s\n";

  if (!dump_path.empty()) {
    std::ofstream out(dump_path, std::ios::binary);
    if (!out) throw DataError("cannot write dump file: " + dump_path);
    for (const auto& u : corp.utterances) {
      nlohmann::ordered_json j;
      j["id"] = u.id;
      j["speaker"] = u.speaker;
      j["span_s"] = u.span_s();
      j["phonemes"] = nlohmann::ordered_json::array();
      for (const auto& seg : u.segments)
        j["phonemes"].push_back({{"phoneme", seg.phoneme},
                                 {"start_s", seg.start_s},
                                 {"end_s", seg.end_s}});
      j["durations_frames"] =
          corpus::durations_in_frames(u, p.cfg.pitch.hop_s);
      j["words"] = nlohmann::ordered_json::array();
      for (const auto& w : u.words)
        j["words"].push_back({{"word", w.word},
                              {"first_phoneme", w.first_phoneme_idx},
                              {"last_phoneme", w.last_phoneme_idx}});
      out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + dump_path);
    std::cout << "dump: " << dump_path << "\n";
  }
}

// ---------------------------------------------------------------------------
// extract-pitch / extract-mel

void run_extract_pitch(const std::string& config_flag, int jobs) {
  Pipeline p = load_pipeline(config_flag);
  auto corp = corpus::load_corpus(p.manifest().string());
  if (corp.utterances.empty()) throw DataError("manifest lists no utterances");
  fs::create_directories(p.pitch_dir());

  std::vector<pitch::PitchTrack> tracks(corp.utterances.size());
  parallel_for(jobs, corp.utterances.size(), [&](size_t i) {
    const auto& utt = corp.utterances[i];
    auto audio = read_audio_checked(utt.audio_path, p.sample_rate());
    tracks[i] =
        pitch::extract_pitch(audio.samples, audio.sample_rate, p.cfg.pitch);
    pitch::write_ptk1((p.pitch_dir() / (utt.id + ".ptk1")).string(),
                      tracks[i]);
  });

  std::map<std::string, std::vector<pitch::PitchTrack>> by_speaker;
  for (size_t i = 0; i < corp.utterances.size(); ++i)
    by_speaker[corp.utterances[i].speaker].push_back(tracks[i]);
  std::map<std::string, pitch::F0Stats> stats;
  for (const auto& [speaker, spk_tracks] : by_speaker)
    stats[speaker] = pitch::f0_statistics(spk_tracks);
  features::write_f0_stats((p.pitch_dir() / "f0_stats.tsv").string(), stats);

  long voiced = 0, total = 0;
  for (const auto& t : tracks) {
    total += static_cast<long>(t.voiced.size());
    for (uint8_t v : t.voiced) voiced += v;
  }
  std::cout << "pitch tracks: " << tracks.size() << "\nframes: " << total
            << " (" << (total ? 100.0 * voiced / total : 0.0)
            << "% voiced)\nstats: "
            << (p.pitch_dir() / "f0_stats.tsv").string() << "\n";
}

void run_extract_mel(const std::string& config_flag, int jobs) {
  Pipeline p = load_pipeline(config_flag);
  auto corp = corpus::load_corpus(p.manifest().string());
  if (corp.utterances.empty()) throw DataError("manifest lists no utterances");
  fs::create_directories(p.mel_dir());

  std::atomic<long> total_frames{0};
  parallel_for(jobs, corp.utterances.size(), [&](size_t i) {
    const auto& utt = corp.utterances[i];
    auto audio = read_audio_checked(utt.audio_path, p.sample_rate());
    auto mel = vocoder::mel_spectrogram(audio.samples, p.cfg.mel);
    total_frames += mel.rows();
    vocoder::export_conditioning(mel,
                                 (p.mel_dir() / (utt.id + ".cnd1")).string());
  });
  std::cout << "mel spectrograms: " << corp.utterances.size()
            << "\nframes: " << total_frames.load() << " x " << p.cfg.mel.n_mels
            << "\n";
}

// ---------------------------------------------------------------------------
// g2p

g2p::G2PTrainConfig g2p_train_config(const config::PipelineConfig& cfg) {
  g2p::G2PTrainConfig tc;
  tc.dims.char_emb = cfg.g2p.char_emb;
  tc.dims.conv_channels = cfg.g2p.conv_channels;
  tc.dims.conv_kernel = cfg.g2p.conv_kernel;
  tc.dims.lstm_hidden = cfg.g2p.lstm_hidden;
  tc.max_epochs = cfg.g2p.max_epochs;
  tc.patience = cfg.g2p.patience;
  tc.lr = cfg.g2p.lr;
  tc.seed = static_cast<uint64_t>(cfg.g2p.seed);
  return tc;
}

void run_g2p_train(const std::string& config_flag, const std::string& lexicon,
                   const std::string& valid_path) {
  Pipeline p = load_pipeline(config_flag);
  auto train = g2p::read_g2p_tsv(resolve_path(p.base, lexicon).string());
  auto valid = valid_path.empty()
                   ? train
                   : g2p::read_g2p_tsv(resolve_path(p.base, valid_path).string());
  fs::create_directories(p.checkpoint_dir());
  fs::create_directories(p.log_dir());

  std::vector<g2p::G2PEpochLog> log;
  auto model = g2p::g2p_train<float>(train, valid, g2p_train_config(p.cfg), &log);
  g2p::save_g2p((p.checkpoint_dir() / "g2p.nnc1").string(), model);

  std::ofstream tsv((p.log_dir() / "g2p_train.tsv").string(),
                    std::ios::binary);
  if (!tsv) throw DataError("cannot write training log");
  tsv << "epoch\ttrain_loss\tvalid_par\tvalid_sar\n";
  for (const auto& e : log)
    tsv << e.epoch << '\t' << e.train_loss << '\t' << e.valid_par << '\t'
        << e.valid_sar << '\n';

  auto report = g2p::evaluate_par_sar(model, valid);
  std::cout << "epochs: " << log.size() << "\nPAR: " << report.par << " ("
            << report.correct_labels << "/" << report.n_labels
            << ")\nSAR: " << report.sar << " (" << report.perfect_sentences
            << "/" << report.n_sentences << ")\ncheckpoint: "
            << (p.checkpoint_dir() / "g2p.nnc1").string() << "\n";
}

void run_g2p_eval(const std::string& config_flag, const std::string& lexicon) {
  Pipeline p = load_pipeline(config_flag);
  auto data = g2p::read_g2p_tsv(resolve_path(p.base, lexicon).string());
  auto model = g2p::load_g2p((p.checkpoint_dir() / "g2p.nnc1").string());
  auto report = g2p::evaluate_par_sar(model, data);
  std::cout << "PAR: " << report.par << " (" << report.correct_labels << "/"
            << report.n_labels << ")\nSAR: " << report.sar << " ("
            << report.perfect_sentences << "/" << report.n_sentences << ")\n";
}

void run_g2p_run(const std::string& config_flag, const std::string& text) {
  Pipeline p = load_pipeline(config_flag);
  auto model = g2p::load_g2p((p.checkpoint_dir() / "g2p.nnc1").string());
  std::cout << join_tokens(g2p::transcribe(model, text)) << "\n";
}

// ---------------------------------------------------------------------------
// prosody-train

void run_prosody_train(const std::string& config_flag) {
  Pipeline p = load_pipeline(config_flag);
  auto corp = corpus::load_corpus(p.manifest().string());
  if (corp.utterances.empty()) throw DataError("manifest lists no utterances");

  features::FeatureConfig fc;
  fc.hop_s = p.cfg.pitch.hop_s;
  fc.mel_log_floor = p.cfg.mel.log_floor;
  features::TrainingPaths tp{p.pitch_dir().string(), p.mel_dir().string(),
                             p.wordvec_dir().string()};
  auto set = features::load_training_set(corp, tp, fc);
  if (set.d_cond != p.cfg.mel.n_mels)
    throw DataError("mel cache width " + std::to_string(set.d_cond) +
                    " does not match configured n_mels " +
                    std::to_string(p.cfg.mel.n_mels));

  prosody::ProsodyDims dims;
  dims.phoneme_emb = p.cfg.prosody.phoneme_emb;
  dims.speaker_emb = p.cfg.prosody.speaker_emb;
  dims.conv_channels = p.cfg.prosody.conv_channels;
  dims.conv_kernel = p.cfg.prosody.conv_kernel;
  dims.lstm_hidden = p.cfg.prosody.lstm_hidden;
  dims.d_max = p.cfg.prosody.d_max;
  dims.d_cond = set.d_cond;
  dims.d_w = set.d_w;

  prosody::ProsodyModel<float> model(set.phonemes, set.speakers, dims);
  std::mt19937 rng(static_cast<uint32_t>(p.cfg.prosody.seed));
  model.init(rng);

  prosody::ProsodyTrainConfig tc;
  tc.max_steps = p.cfg.prosody.max_steps;
  tc.batch_size = p.cfg.prosody.batch_size;
  tc.schedule.lr0 = p.cfg.prosody.lr0;
  tc.schedule.decay = p.cfg.prosody.lr_decay;
  tc.seed = static_cast<uint64_t>(p.cfg.prosody.seed);
  tc.run_preflight = p.cfg.prosody.gradient_preflight;

  auto log = prosody::prosody_train(model, set.batches, tc);

  fs::create_directories(p.checkpoint_dir());
  fs::create_directories(p.log_dir());
  prosody::save_prosody((p.checkpoint_dir() / "prosody.nnc1").string(), model);

  std::ofstream tsv((p.log_dir() / "prosody_train.tsv").string(),
                    std::ios::binary);
  if (!tsv) throw DataError("cannot write training log");
  tsv << "step\tlr\tdur\tf0\tvuv\tcond\ttotal\n";
  for (const auto& e : log)
    tsv << e.step << '\t' << e.lr << '\t' << e.losses.dur << '\t'
        << e.losses.f0 << '\t' << e.losses.vuv << '\t' << e.losses.cond
        << '\t' << e.losses.total << '\n';

  std::cout << "utterances: " << set.batches.size()
            << "\nphonemes: " << set.phonemes.size()
            << "\nspeakers: " << set.speakers.size()
            << "\nsteps: " << log.size() << "\nfinal loss: "
            << (log.empty() ? 0.0 : log.back().losses.total)
            << "\ncheckpoint: "
            << (p.checkpoint_dir() / "prosody.nnc1").string() << "\n";
}

// ---------------------------------------------------------------------------
// synth

// Whitespace-delimited word index per grapheme; whitespace itself and
// anything outside a chunk belongs to no word.
std::vector<int> word_of_grapheme(const std::vector<std::string>& graphemes) {
  std::vector<int> out(graphemes.size(), -1);
  int word = -1;
  bool in_word = false;
  for (size_t i = 0; i < graphemes.size(); ++i) {
    bool space = graphemes[i] == " " || graphemes[i] == "\t";
    if (space) {
      in_word = false;
      continue;
    }
    if (!in_word) {
      ++word;
      in_word = true;
    }
    out[i] = word;
  }
  return out;
}

void run_synth(const std::string& config_flag, const std::string& text,
               const std::string& speaker, const std::string& out_dir,
               const std::string& name, bool no_wav,
               const std::string& wordvec_path) {
  Pipeline p = load_pipeline(config_flag);
  auto g2p_model = g2p::load_g2p((p.checkpoint_dir() / "g2p.nnc1").string());
  auto pro = prosody::load_prosody((p.checkpoint_dir() / "prosody.nnc1").string());
  auto stats_map =
      features::read_f0_stats((p.pitch_dir() / "f0_stats.tsv").string());

  auto spk = pro.speaker_to_id.find(speaker);
  if (spk == pro.speaker_to_id.end())
    throw DataError("speaker '" + speaker + "' not in the prosody model");
  auto stats = stats_map.find(speaker);
  if (stats == stats_map.end())
    throw DataError("no f0 statistics for speaker '" + speaker + "'");

  auto tokens = g2p::transcribe_tokens(g2p_model, text);
  if (tokens.empty())
    throw DataError("g2p produced no phonemes for the input text");
  auto graphemes = g2p::split_graphemes(text);
  auto gword = word_of_grapheme(graphemes);
  int n_words = *std::max_element(gword.begin(), gword.end()) + 1;

  std::vector<std::string> phonemes;
  std::vector<int> wop;
  for (const auto& tok : tokens) {
    phonemes.push_back(tok.text);
    wop.push_back(tok.grapheme >= 0 ? gword[static_cast<size_t>(tok.grapheme)]
                                    : -1);
  }

  nn::Tensor<float> word_vecs({n_words, pro.dims.d_w});
  if (!wordvec_path.empty()) {
    word_vecs = wordvec::read_word_vectors(wordvec_path);
    if (word_vecs.rows() != n_words)
      throw DataError(wordvec_path + ": " + std::to_string(word_vecs.rows()) +
                      " word vectors for " + std::to_string(n_words) +
                      " words in the text");
    if (word_vecs.cols() != pro.dims.d_w)
      throw DataError(wordvec_path + ": width " +
                      std::to_string(word_vecs.cols()) +
                      " does not match the model's " +
                      std::to_string(pro.dims.d_w));
  }

  auto res = prosody::infer(pro, pro.encode_phonemes(phonemes), wop, word_vecs,
                            spk->second);
  long T = res.out.pitch.rows();

  // Denormalized pitch for the debug vocoder and the PTK1 sidecar.
  pitch::PitchTrack track;
  track.hop_s = p.cfg.pitch.hop_s;
  track.f0_hz.resize(static_cast<size_t>(T), 0.0f);
  track.voiced = res.voiced;
  long n_voiced = 0;
  for (long t = 0; t < T; ++t) {
    if (!res.voiced[static_cast<size_t>(t)]) continue;
    ++n_voiced;
    double f0 = std::exp(static_cast<double>(res.f0_norm[static_cast<size_t>(t)]) *
                             stats->second.std_log +
                         stats->second.mean_log);
    track.f0_hz[static_cast<size_t>(t)] = static_cast<float>(
        std::clamp(f0, p.cfg.pitch.f0_min, p.cfg.pitch.f0_max));
  }

  fs::path out_base = resolve_path(p.base, out_dir);
  fs::create_directories(out_base);
  std::string cnd_path = (out_base / (name + ".cnd1")).string();
  std::string ptk_path = (out_base / (name + ".ptk1")).string();
  vocoder::export_conditioning(res.out.cond, cnd_path);
  pitch::write_ptk1(ptk_path, track);

  std::string wav_path;
  if (!no_wav) {
    auto samples = vocoder::debug_synthesize(
        track.f0_hz, track.voiced, frame_energy(res.out.cond), p.cfg.mel);
    wav_path = (out_base / (name + ".wav")).string();
    wav::write(wav_path, samples, p.sample_rate());
  }

  std::cout << "phonemes: " << join_tokens(phonemes) << "\ndurations:";
  for (int d : res.durations) std::cout << ' ' << d;
  std::cout << "\nframes: " << T << "\nvoiced fraction: "
            << (T ? static_cast<double>(n_voiced) / static_cast<double>(T)
                  : 0.0)
            << "\nconditioning: " << cnd_path << "\npitch: " << ptk_path
            << "\n";
  if (!wav_path.empty()) std::cout << "wav: " << wav_path << "\n";
}

// ---------------------------------------------------------------------------
// debug-vocode

void run_debug_vocode(const std::string& config_flag,
                      const std::string& cnd_path, const std::string& ptk_path,
                      const std::string& out_path) {
  Pipeline p = load_pipeline(config_flag);
  auto cond = vocoder::import_conditioning(cnd_path);
  auto track = pitch::read_ptk1(ptk_path);
  if (static_cast<long>(track.f0_hz.size()) != cond.rows())
    throw DataError("frame count mismatch: " + ptk_path + " has " +
                    std::to_string(track.f0_hz.size()) + ", " + cnd_path +
                    " has " + std::to_string(cond.rows()));
  auto samples = vocoder::debug_synthesize(track.f0_hz, track.voiced,
                                           frame_energy(cond), p.cfg.mel);
  wav::write(out_path, samples, p.sample_rate());
  std::cout << "wav: " << out_path << " (" << samples.size() << " samples)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ttsfront: TTS front-end pipeline (g2p, pitch, prosody, "
               "vocoder conditioning)"};
  app.require_subcommand(1);
  // Lets the global --config appear after the subcommand name too.
  app.fallthrough();

  std::string config_flag;
  app.add_option("--config", config_flag,
                 "config file path (default: $TTSFRONT_CONFIG or ./" +
                     std::string(config::kDefaultConfigName) + ")");

  bool init_force = false;
  auto* init = app.add_subcommand("init", "write a default config file and "
                                          "create the pipeline directories");
  init->add_flag("--force", init_force, "overwrite an existing config");

  std::string import_dump;
  auto* import =
      app.add_subcommand("import", "load the aligned corpus and print a summary");
  import->add_option("--dump", import_dump,
                     "write one JSON object per utterance to this file");

  int pitch_jobs = 1;
  auto* extract_pitch = app.add_subcommand(
      "extract-pitch", "compute pitch tracks and per-speaker f0 statistics");
  extract_pitch->add_option("--jobs", pitch_jobs, "parallel workers")
      ->check(CLI::PositiveNumber);

  int mel_jobs = 1;
  auto* extract_mel = app.add_subcommand(
      "extract-mel", "compute gold mel conditioning for every utterance");
  extract_mel->add_option("--jobs", mel_jobs, "parallel workers")
      ->check(CLI::PositiveNumber);

  std::string g2p_lexicon, g2p_valid;
  auto* g2p_train_cmd =
      app.add_subcommand("g2p-train", "train the g2p model on a lexicon TSV");
  g2p_train_cmd->add_option("--lexicon", g2p_lexicon, "training TSV")
      ->required();
  g2p_train_cmd->add_option(
      "--valid", g2p_valid,
      "validation TSV for early stopping (default: the training set)");

  std::string g2p_eval_lexicon;
  auto* g2p_eval_cmd =
      app.add_subcommand("g2p-eval", "report PAR/SAR of the trained g2p model");
  g2p_eval_cmd->add_option("--lexicon", g2p_eval_lexicon, "evaluation TSV")
      ->required();

  std::string g2p_text;
  auto* g2p_run_cmd =
      app.add_subcommand("g2p-run", "transcribe text to phonemes");
  g2p_run_cmd->add_option("--text", g2p_text, "input text")->required();

  auto* prosody_train_cmd = app.add_subcommand(
      "prosody-train", "train the prosody network on the cached features");

  std::string synth_text, synth_speaker, synth_out = "synth_out",
                                         synth_name = "utt", synth_wordvec;
  bool synth_no_wav = false;
  auto* synth = app.add_subcommand(
      "synth", "text -> phonemes -> prosody -> conditioning (+ debug wav)");
  synth->add_option("--text", synth_text, "input text")->required();
  synth->add_option("--speaker", synth_speaker, "speaker name")->required();
  synth->add_option("--out-dir", synth_out, "output directory");
  synth->add_option("--name", synth_name, "output file stem");
  synth->add_option("--wordvec", synth_wordvec,
                    "WEB1/WES1 file with one vector per word of the text "
                    "(default: zero vectors)");
  synth->add_flag("--no-wav", synth_no_wav, "skip the debug waveform");

  std::string vocode_cnd, vocode_ptk, vocode_out = "vocoded.wav";
  auto* vocode = app.add_subcommand(
      "debug-vocode", "render a conditioning file to a debug waveform");
  vocode->add_option("--cnd", vocode_cnd, "CND1 conditioning file")->required();
  vocode->add_option("--ptk", vocode_ptk, "PTK1 pitch file")->required();
  vocode->add_option("--out", vocode_out, "output WAV path");

  try {
    app.parse(argc, argv);
    if (init->parsed()) run_init(config_flag, init_force);
    if (import->parsed()) run_import(config_flag, import_dump);
    if (extract_pitch->parsed()) run_extract_pitch(config_flag, pitch_jobs);
    if (extract_mel->parsed()) run_extract_mel(config_flag, mel_jobs);
    if (g2p_train_cmd->parsed())
      run_g2p_train(config_flag, g2p_lexicon, g2p_valid);
    if (g2p_eval_cmd->parsed()) run_g2p_eval(config_flag, g2p_eval_lexicon);
    if (g2p_run_cmd->parsed()) run_g2p_run(config_flag, g2p_text);
    if (prosody_train_cmd->parsed()) run_prosody_train(config_flag);
    if (synth->parsed())
      run_synth(config_flag, synth_text, synth_speaker, synth_out, synth_name,
                synth_no_wav, synth_wordvec);
    if (vocode->parsed())
      run_debug_vocode(config_flag, vocode_cnd, vocode_ptk, vocode_out);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
