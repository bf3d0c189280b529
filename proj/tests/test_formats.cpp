#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "ttsfront/config.hpp"
#include "ttsfront/features.hpp"
#include "ttsfront/wordvec.hpp"

using namespace ttsfront;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::current_path() / ("scratch_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nn::Tensor<float> random_matrix(int r, int c, unsigned seed) {
  nn::Tensor<float> t({r, c});
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-3.f, 3.f);
  for (auto& v : t.data) v = dist(rng);
  return t;
}

// Two phonemes with a single word over both; spans are exact frame
// multiples so the duration split is unambiguous.
corpus::Utterance two_phoneme_utterance() {
  corpus::Utterance utt;
  utt.id = "utt0";
  utt.speaker = "spk";
  utt.segments = {{"a", 0.00, 0.03}, {"b", 0.03, 0.05}};
  utt.words = {{"ab", 0, 1}};
  utt.sample_rate = 16000;
  utt.n_samples = 800;
  return utt;
}

pitch::PitchTrack track_of(std::vector<float> f0, double hop) {
  pitch::PitchTrack t;
  t.hop_s = hop;
  for (float v : f0) {
    t.f0_hz.push_back(v);
    t.voiced.push_back(v > 0 ? 1 : 0);
  }
  return t;
}

}  // namespace

TEST_CASE("subtoken maps are validated strictly", "[formats]") {
  using wordvec::SubtokenMap;
  CHECK_NOTHROW(wordvec::validate_subtoken_map({{0, 2}, {3}}, 4));
  CHECK_THROWS_AS(wordvec::validate_subtoken_map({{}}, 4), DataError);
  CHECK_THROWS_AS(wordvec::validate_subtoken_map({{0, 4}}, 4), DataError);
  CHECK_THROWS_AS(wordvec::validate_subtoken_map({{2, 1}}, 4), DataError);
  CHECK_THROWS_AS(wordvec::validate_subtoken_map({{1, 1}}, 4), DataError);
  CHECK_THROWS_AS(wordvec::validate_subtoken_map({{0, 1}, {1}}, 4), DataError);
}

TEST_CASE("reduce_subtokens picks the first subtoken row", "[formats]") {
  auto raw = random_matrix(5, 3, 1);
  auto out = wordvec::reduce_subtokens(raw, {{1, 2}, {4}});
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == 3);
  for (int d = 0; d < 3; ++d) {
    CHECK(out.row(0)[d] == raw.row(1)[d]);
    CHECK(out.row(1)[d] == raw.row(4)[d]);
  }
}

TEST_CASE("WEB1 files round-trip bitwise", "[formats]") {
  auto dir = scratch_dir("web1");
  auto vectors = random_matrix(7, 16, 2);
  std::string path = (dir / "w.web1").string();
  wordvec::write_web1(path, vectors);
  auto loaded = wordvec::read_word_vectors(path);
  REQUIRE(loaded.shape == vectors.shape);
  CHECK(loaded.data == vectors.data);

  SECTION("bad magic") {
    std::ofstream bad((dir / "bad.web1").string(), std::ios::binary);
    bad << "XXXXrest";
    bad.close();
    CHECK_THROWS_AS(wordvec::read_word_vectors((dir / "bad.web1").string()),
                    DataError);
  }
  SECTION("truncation") {
    auto bytes = read_text_file(path);
    std::ofstream trunc((dir / "trunc.web1").string(), std::ios::binary);
    trunc.write(bytes.data(), static_cast<long>(bytes.size()) - 5);
    trunc.close();
    CHECK_THROWS_AS(wordvec::read_word_vectors((dir / "trunc.web1").string()),
                    DataError);
  }
}

TEST_CASE("WES1 files reduce to word rows on load", "[formats]") {
  auto dir = scratch_dir("wes1");
  auto raw = random_matrix(6, 4, 3);
  wordvec::SubtokenMap map{{0, 1}, {2}, {3, 4, 5}};
  std::string path = (dir / "w.wes1").string();
  wordvec::write_wes1(path, raw, map);
  auto loaded = wordvec::read_word_vectors(path);
  auto expect = wordvec::reduce_subtokens(raw, map);
  REQUIRE(loaded.shape == expect.shape);
  CHECK(loaded.data == expect.data);

  SECTION("invalid map is rejected at write time") {
    CHECK_THROWS_AS(wordvec::write_wes1((dir / "x.wes1").string(), raw,
                                        {{0}, {0}}),
                    DataError);
  }
}

TEST_CASE("f0 statistics files round-trip", "[formats]") {
  auto dir = scratch_dir("f0stats");
  std::string path = (dir / "f0_stats.tsv").string();
  std::map<std::string, pitch::F0Stats> stats{
      {"alice", {4.8283137373023015, 0.21}},
      {"speaker two", {5.0106352940962555, 0.173}},
  };
  features::write_f0_stats(path, stats);
  auto loaded = features::read_f0_stats(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("alice").mean_log == stats.at("alice").mean_log);
  CHECK(loaded.at("alice").std_log == stats.at("alice").std_log);
  CHECK(loaded.at("speaker two").mean_log == stats.at("speaker two").mean_log);

  SECTION("tab in speaker name is rejected at write time") {
    std::map<std::string, pitch::F0Stats> bad{{"a\tb", {1.0, 1.0}}};
    CHECK_THROWS_AS(features::write_f0_stats((dir / "x.tsv").string(), bad),
                    DataError);
  }
  SECTION("malformed number names the line") {
    std::ofstream bad((dir / "bad.tsv").string());
    bad << "alice\t4.8\t0.2\nbob\tnotanumber\t0.2\n";
    bad.close();
    try {
      features::read_f0_stats((dir / "bad.tsv").string());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 2"));
    }
  }
  SECTION("nonpositive std is rejected") {
    std::ofstream bad((dir / "zero.tsv").string());
    bad << "alice\t4.8\t0\n";
    bad.close();
    CHECK_THROWS_AS(features::read_f0_stats((dir / "zero.tsv").string()),
                    DataError);
  }
  SECTION("duplicate speaker is rejected") {
    std::ofstream bad((dir / "dup.tsv").string());
    bad << "alice\t4.8\t0.2\nalice\t4.9\t0.2\n";
    bad.close();
    CHECK_THROWS_AS(features::read_f0_stats((dir / "dup.tsv").string()),
                    DataError);
  }
}

TEST_CASE("assemble_batch aligns cache features with durations", "[formats]") {
  auto utt = two_phoneme_utterance();
  std::map<std::string, int> pho{{"a", 1}, {"b", 2}};
  pitch::F0Stats stats{std::log(100.0), 0.25};
  auto word_vecs = random_matrix(1, 3, 4);
  features::FeatureConfig cfg;  // hop 0.010 -> durations [3, 2], T = 5

  SECTION("exact frame counts copy through") {
    auto track = track_of({100.f, 110.f, 0.f, 120.f, 0.f}, cfg.hop_s);
    auto mel = random_matrix(5, 4, 5);
    auto b = features::assemble_batch<float>(utt, track, stats, mel, word_vecs,
                                             pho, 3, cfg);
    CHECK(b.id == "utt0");
    CHECK(b.speaker_id == 3);
    CHECK(b.phoneme_ids == std::vector<int>{1, 2});
    CHECK(b.word_of_phoneme == std::vector<int>{0, 0});
    CHECK(b.gold_durations == std::vector<int>{3, 2});
    REQUIRE(b.total_frames() == 5);
    CHECK(b.gold_voiced == std::vector<uint8_t>{1, 1, 0, 1, 0});
    for (int t : {0, 1, 3}) {
      double want = (std::log(track.f0_hz[t]) - stats.mean_log) / stats.std_log;
      CHECK(b.gold_f0[t] == Catch::Approx(want).margin(1e-6));
    }
    CHECK(b.gold_f0[2] == 0.f);
    CHECK(b.gold_mel.data == mel.data);
    CHECK(b.word_vecs.data == word_vecs.data);
  }

  SECTION("short features are padded within tolerance") {
    auto track = track_of({100.f, 110.f, 0.f}, cfg.hop_s);
    auto mel = random_matrix(3, 4, 6);
    auto b = features::assemble_batch<float>(utt, track, stats, mel, word_vecs,
                                             pho, 0, cfg);
    REQUIRE(b.total_frames() == 5);
    CHECK(b.gold_voiced[3] == 0);
    CHECK(b.gold_voiced[4] == 0);
    CHECK(b.gold_f0[4] == 0.f);
    float pad = std::log(1e-5f);
    for (int d = 0; d < 4; ++d) {
      CHECK(b.gold_mel.row(3)[d] == Catch::Approx(pad).margin(1e-6));
      CHECK(b.gold_mel.row(4)[d] == Catch::Approx(pad).margin(1e-6));
    }
  }

  SECTION("long features are cropped within tolerance") {
    auto track = track_of({100.f, 110.f, 0.f, 120.f, 0.f, 130.f, 140.f},
                          cfg.hop_s);
    auto mel = random_matrix(7, 4, 7);
    auto b = features::assemble_batch<float>(utt, track, stats, mel, word_vecs,
                                             pho, 0, cfg);
    REQUIRE(b.total_frames() == 5);
    CHECK(b.gold_voiced == std::vector<uint8_t>{1, 1, 0, 1, 0});
    for (int d = 0; d < 4; ++d) CHECK(b.gold_mel.row(4)[d] == mel.row(4)[d]);
  }

  SECTION("gaps beyond tolerance are data errors") {
    auto track = track_of({100.f, 110.f}, cfg.hop_s);
    auto mel = random_matrix(2, 4, 8);
    try {
      features::assemble_batch<float>(utt, track, stats, mel, word_vecs, pho,
                                      0, cfg);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("utt0"));
    }
  }

  SECTION("a late alignment start slices from the matching frame") {
    auto shifted = utt;
    for (auto& seg : shifted.segments) {
      seg.start_s += 0.02;
      seg.end_s += 0.02;
    }
    auto track = track_of({0.f, 0.f, 100.f, 110.f, 0.f, 120.f, 0.f}, cfg.hop_s);
    auto mel = random_matrix(7, 4, 9);
    auto b = features::assemble_batch<float>(shifted, track, stats, mel,
                                             word_vecs, pho, 0, cfg);
    REQUIRE(b.total_frames() == 5);
    CHECK(b.gold_voiced == std::vector<uint8_t>{1, 1, 0, 1, 0});
    for (int d = 0; d < 4; ++d) CHECK(b.gold_mel.row(0)[d] == mel.row(2)[d]);
  }

  SECTION("hop mismatch is a data error") {
    auto track = track_of({100.f, 110.f, 0.f, 120.f, 0.f}, 0.005);
    auto mel = random_matrix(5, 4, 10);
    CHECK_THROWS_AS(features::assemble_batch<float>(utt, track, stats, mel,
                                                    word_vecs, pho, 0, cfg),
                    DataError);
  }

  SECTION("word vector count must match the word count") {
    auto track = track_of({100.f, 110.f, 0.f, 120.f, 0.f}, cfg.hop_s);
    auto mel = random_matrix(5, 4, 11);
    auto wrong = random_matrix(2, 3, 12);
    CHECK_THROWS_AS(features::assemble_batch<float>(utt, track, stats, mel,
                                                    wrong, pho, 0, cfg),
                    DataError);
  }
}

TEST_CASE("config files round-trip and reject malformed input", "[formats]") {
  auto dir = scratch_dir("config");
  std::string path = (dir / "ttsfront.cfg").string();

  config::PipelineConfig defaults;
  config::write_config(path, defaults);
  std::string first = read_text_file(path);
  auto loaded = config::read_config(path);
  config::write_config(path, loaded);
  CHECK(read_text_file(path) == first);

  CHECK(loaded.mel.hop == 240);
  CHECK(loaded.pitch.hop_s == 0.010);
  CHECK(loaded.prosody.batch_size == 16);
  CHECK(loaded.prosody.lr0 == 2e-4);
  CHECK(loaded.g2p.lstm_hidden == 128);
  CHECK(loaded.paths.manifest == "data/manifest.tsv");

  SECTION("edited values survive a round trip") {
    auto edited = defaults;
    edited.mel.sample_rate = 16000;
    edited.mel.hop = 160;
    edited.mel.fmax = 8000;
    edited.prosody.max_steps = 123;
    edited.pitch.nccf_cand_thresh = 0.25;
    std::string path2 = (dir / "edited.cfg").string();
    config::write_config(path2, edited);
    auto back = config::read_config(path2);
    CHECK(back.mel.hop == 160);
    CHECK(back.prosody.max_steps == 123);
    CHECK(back.pitch.nccf_cand_thresh == 0.25);
  }
  SECTION("unknown key names the line") {
    std::ofstream bad((dir / "bad.cfg").string());
    bad << "[mel]\nhop = 240\nnot_a_key = 1\n";
    bad.close();
    try {
      config::read_config((dir / "bad.cfg").string());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 3"));
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("not_a_key"));
    }
  }
  SECTION("duplicate key is rejected") {
    std::string text = first + "\n[mel]\nhop = 240\n";
    std::ofstream dup((dir / "dup.cfg").string());
    dup << text;
    dup.close();
    CHECK_THROWS_AS(config::read_config((dir / "dup.cfg").string()),
                    DataError);
  }
  SECTION("malformed number is rejected") {
    std::ofstream bad((dir / "num.cfg").string());
    bad << "[mel]\nhop = fast\n";
    bad.close();
    CHECK_THROWS_AS(config::read_config((dir / "num.cfg").string()),
                    DataError);
  }
  SECTION("semantic validation rejects inconsistent hops") {
    auto broken = defaults;
    broken.pitch.hop_s = 0.02;  // mel hop stays 240/24000 = 0.01
    CHECK_THROWS_AS(config::write_config((dir / "x.cfg").string(), broken),
                    DataError);
  }
  SECTION("comments and blank lines are ignored") {
    std::ofstream ok((dir / "comment.cfg").string());
    ok << "# leading comment\n\n[mel]\n  hop = 240\n";
    ok.close();
    CHECK_NOTHROW(config::read_config((dir / "comment.cfg").string()));
  }
}

TEST_CASE("config path resolution prefers flag, then env, then default",
          "[formats]") {
  CHECK(config::resolve_config_path("explicit.cfg") == "explicit.cfg");
  ::setenv(config::kConfigEnvVar, "/tmp/from_env.cfg", 1);
  CHECK(config::resolve_config_path("") == "/tmp/from_env.cfg");
  CHECK(config::resolve_config_path("flag.cfg") == "flag.cfg");
  ::unsetenv(config::kConfigEnvVar);
  CHECK(config::resolve_config_path("") == config::kDefaultConfigName);
}

TEST_CASE("load_training_set wires the cache directories together",
          "[formats]") {
  auto dir = scratch_dir("trainset");
  features::FeatureConfig cfg;

  corpus::AlignedCorpus corp;
  auto u0 = two_phoneme_utterance();
  corpus::Utterance u1;
  u1.id = "utt1";
  u1.speaker = "ann";  // sorts before "spk"
  u1.segments = {{"sil", 0.0, 0.04}};
  u1.sample_rate = 16000;
  u1.n_samples = 640;
  corp.utterances = {u0, u1};
  corp.speakers = {"spk", "ann"};

  auto t0 = track_of({100.f, 110.f, 0.f, 120.f, 0.f}, cfg.hop_s);
  auto t1 = track_of({0.f, 0.f, 0.f, 0.f}, cfg.hop_s);
  pitch::write_ptk1((dir / "utt0.ptk1").string(), t0);
  pitch::write_ptk1((dir / "utt1.ptk1").string(), t1);
  features::write_f0_stats((dir / "f0_stats.tsv").string(),
                           {{"spk", {std::log(100.0), 0.25}},
                            {"ann", {std::log(200.0), 0.3}}});
  vocoder::export_conditioning(random_matrix(5, 4, 20),
                               (dir / "utt0.cnd1").string());
  vocoder::export_conditioning(random_matrix(4, 4, 21),
                               (dir / "utt1.cnd1").string());
  wordvec::write_web1((dir / "utt0.web1").string(), random_matrix(1, 6, 22));
  // utt1 has no words and no word-vector file.

  features::TrainingPaths paths{dir.string(), dir.string(), dir.string()};
  auto set = features::load_training_set(corp, paths, cfg);

  REQUIRE(set.batches.size() == 2);
  CHECK(set.phonemes == std::vector<std::string>{"a", "b", "sil"});
  CHECK(set.speakers == std::vector<std::string>{"ann", "spk"});
  CHECK(set.d_w == 6);
  CHECK(set.d_cond == 4);
  CHECK(set.batches[0].speaker_id == 1);  // "spk" after sorting
  CHECK(set.batches[1].speaker_id == 0);
  CHECK(set.batches[0].phoneme_ids == std::vector<int>{1, 2});
  CHECK(set.batches[1].phoneme_ids == std::vector<int>{3});
  CHECK(set.batches[1].word_vecs.rows() == 0);
  CHECK(set.batches[1].word_vecs.cols() == 6);
  CHECK(set.batches[1].total_frames() == 4);

  SECTION("missing f0 statistics for a speaker") {
    features::write_f0_stats((dir / "f0_stats.tsv").string(),
                             {{"spk", {std::log(100.0), 0.25}}});
    CHECK_THROWS_AS(features::load_training_set(corp, paths, cfg), DataError);
  }
  SECTION("missing pitch cache file") {
    fs::remove(dir / "utt1.ptk1");
    CHECK_THROWS_AS(features::load_training_set(corp, paths, cfg), DataError);
  }
  SECTION("missing word vectors for an utterance with words") {
    fs::remove(dir / "utt0.web1");
    CHECK_THROWS_AS(features::load_training_set(corp, paths, cfg), DataError);
  }
  SECTION("inconsistent mel width across utterances") {
    vocoder::export_conditioning(random_matrix(4, 5, 23),
                                 (dir / "utt1.cnd1").string());
    CHECK_THROWS_AS(features::load_training_set(corp, paths, cfg), DataError);
  }
}
