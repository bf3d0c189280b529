#pragma once

// Pipeline configuration: one flat key-value text file with sections.
// `init` writes every default explicitly so a run is self-documenting;
// reading rejects unknown keys and duplicates instead of guessing.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/pitch.hpp"
#include "ttsfront/vocoder.hpp"

namespace ttsfront::config {

inline constexpr const char* kConfigEnvVar = "TTSFRONT_CONFIG";
inline constexpr const char* kDefaultConfigName = "ttsfront.cfg";

struct PipelineConfig {
  struct Paths {
    std::string manifest = "data/manifest.tsv";
    std::string pitch_dir = "cache/pitch";
    std::string mel_dir = "cache/mel";
    std::string wordvec_dir = "cache/wordvec";
    std::string checkpoint_dir = "checkpoints";
    std::string log_dir = "logs";
  } paths;

  vocoder::MelConfig mel;
  pitch::PitchConfig pitch;

  struct G2P {
    int char_emb = 64;
    int conv_channels = 128;
    int conv_kernel = 5;
    int lstm_hidden = 128;
    int max_epochs = 500;
    int patience = 20;
    double lr = 1e-3;
    long seed = 1;
  } g2p;

  struct Prosody {
    int phoneme_emb = 64;
    int speaker_emb = 32;
    int conv_channels = 128;
    int conv_kernel = 5;
    int lstm_hidden = 128;
    int d_max = 100;
    long max_steps = 20000;
    int batch_size = 16;
    double lr0 = 2e-4;
    double lr_decay = 1e-5;
    long seed = 1;
    bool gradient_preflight = true;
  } prosody;

  struct Split {
    double valid_fraction = 0.1;
    long seed = 1;
  } split;

  void validate() const {
    mel.validate();
    pitch.validate(mel.sample_rate);
    double mel_hop_s = mel.hop / mel.sample_rate;
    if (std::abs(mel_hop_s - pitch.hop_s) > 1e-9)
      throw DataError("config: mel hop " + std::to_string(mel_hop_s) +
                      "s and pitch hop " + std::to_string(pitch.hop_s) +
                      "s must agree");
    if (!(split.valid_fraction > 0 && split.valid_fraction < 1))
      throw DataError("config: valid_fraction must be in (0, 1)");
    if (prosody.batch_size < 1 || prosody.max_steps < 1)
      throw DataError("config: prosody batch_size and max_steps must be >= 1");
    if (g2p.max_epochs < 1 || g2p.patience < 1)
      throw DataError("config: g2p max_epochs and patience must be >= 1");
    if (prosody.d_max < 1) throw DataError("config: d_max must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Schema: ordered (section, key) -> typed pointer into the struct.

namespace detail {

struct Entry {
  const char* section;
  const char* key;
  std::variant<int*, long*, double*, bool*, std::string*> ref;
};

inline std::vector<Entry> schema(PipelineConfig& c) {
  return {
      {"paths", "manifest", &c.paths.manifest},
      {"paths", "pitch_dir", &c.paths.pitch_dir},
      {"paths", "mel_dir", &c.paths.mel_dir},
      {"paths", "wordvec_dir", &c.paths.wordvec_dir},
      {"paths", "checkpoint_dir", &c.paths.checkpoint_dir},
      {"paths", "log_dir", &c.paths.log_dir},

      {"mel", "sample_rate", &c.mel.sample_rate},
      {"mel", "hop", &c.mel.hop},
      {"mel", "window", &c.mel.window},
      {"mel", "fft", &c.mel.fft},
      {"mel", "n_mels", &c.mel.n_mels},
      {"mel", "fmin", &c.mel.fmin},
      {"mel", "fmax", &c.mel.fmax},
      {"mel", "log_floor", &c.mel.log_floor},

      {"pitch", "f0_min", &c.pitch.f0_min},
      {"pitch", "f0_max", &c.pitch.f0_max},
      {"pitch", "hop_s", &c.pitch.hop_s},
      {"pitch", "corr_window_s", &c.pitch.corr_window_s},
      {"pitch", "pass1_rate", &c.pitch.pass1_rate},
      {"pitch", "nccf_cand_thresh", &c.pitch.nccf_cand_thresh},
      {"pitch", "max_cands_per_frame", &c.pitch.max_cands_per_frame},
      {"pitch", "vuv_transition_cost", &c.pitch.vuv_transition_cost},
      {"pitch", "freq_jump_weight", &c.pitch.freq_jump_weight},
      {"pitch", "unvoiced_local_cost", &c.pitch.unvoiced_local_cost},
      {"pitch", "parabolic_interp", &c.pitch.parabolic_interp},

      {"g2p", "char_emb", &c.g2p.char_emb},
      {"g2p", "conv_channels", &c.g2p.conv_channels},
      {"g2p", "conv_kernel", &c.g2p.conv_kernel},
      {"g2p", "lstm_hidden", &c.g2p.lstm_hidden},
      {"g2p", "max_epochs", &c.g2p.max_epochs},
      {"g2p", "patience", &c.g2p.patience},
      {"g2p", "lr", &c.g2p.lr},
      {"g2p", "seed", &c.g2p.seed},

      {"prosody", "phoneme_emb", &c.prosody.phoneme_emb},
      {"prosody", "speaker_emb", &c.prosody.speaker_emb},
      {"prosody", "conv_channels", &c.prosody.conv_channels},
      {"prosody", "conv_kernel", &c.prosody.conv_kernel},
      {"prosody", "lstm_hidden", &c.prosody.lstm_hidden},
      {"prosody", "d_max", &c.prosody.d_max},
      {"prosody", "max_steps", &c.prosody.max_steps},
      {"prosody", "batch_size", &c.prosody.batch_size},
      {"prosody", "lr0", &c.prosody.lr0},
      {"prosody", "lr_decay", &c.prosody.lr_decay},
      {"prosody", "seed", &c.prosody.seed},
      {"prosody", "gradient_preflight", &c.prosody.gradient_preflight},

      {"split", "valid_fraction", &c.split.valid_fraction},
      {"split", "seed", &c.split.seed},
  };
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline std::string format_value(const Entry& e) {
  struct Visitor {
    std::string operator()(int* p) const { return std::to_string(*p); }
    std::string operator()(long* p) const { return std::to_string(*p); }
    std::string operator()(double* p) const { return format_double(*p); }
    std::string operator()(bool* p) const { return *p ? "true" : "false"; }
    std::string operator()(std::string* p) const { return *p; }
  };
  return std::visit(Visitor{}, e.ref);
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline void parse_value(const Entry& e, const std::string& raw, int line_no) {
  auto bad = [&](const char* want) {
    throw DataError("config line " + std::to_string(line_no) + ": '" + raw +
                    "' is not a valid " + want + " for " + e.section + "." +
                    e.key);
  };
  struct Visitor {
    const std::string& raw;
    int line_no;
    decltype(bad)& fail;
    void operator()(int* p) const {
      try {
        size_t used = 0;
        long v = std::stol(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("");
        *p = static_cast<int>(v);
      } catch (const std::exception&) {
        fail("integer");
      }
    }
    void operator()(long* p) const {
      try {
        size_t used = 0;
        *p = std::stol(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail("integer");
      }
    }
    void operator()(double* p) const {
      try {
        size_t used = 0;
        *p = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail("number");
      }
    }
    void operator()(bool* p) const {
      if (raw == "true")
        *p = true;
      else if (raw == "false")
        *p = false;
      else
        fail("boolean (true/false)");
    }
    void operator()(std::string* p) const { *p = raw; }
  };
  std::visit(Visitor{raw, line_no, bad}, e.ref);
}

}  // namespace detail

inline void write_config(const std::string& path, PipelineConfig& cfg) {
  cfg.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write config file: " + path);
  out << "# ttsfront pipeline configuration\n";
  std::string section;
  for (const auto& e : detail::schema(cfg)) {
    if (section != e.section) {
      section = e.section;
      out << "\n[" << section << "]\n";
    }
    out << e.key << " = " << detail::format_value(e) << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

inline PipelineConfig read_config(const std::string& path) {
  std::string text = read_text_file(path);
  PipelineConfig cfg;
  auto entries = detail::schema(cfg);
  std::map<std::pair<std::string, std::string>, const detail::Entry*> lookup;
  for (const auto& e : entries) lookup[{e.section, e.key}] = &e;
  std::map<std::pair<std::string, std::string>, int> seen;

  std::istringstream lines(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string body = detail::trim(line);
    if (body.empty() || body[0] == '#') continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw DataError("config line " + std::to_string(line_no) +
                        ": unterminated section header");
      section = detail::trim(body.substr(1, body.size() - 2));
      continue;
    }
    size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected 'key = value'");
    std::string key = detail::trim(body.substr(0, eq));
    std::string value = detail::trim(body.substr(eq + 1));
    auto it = lookup.find({section, key});
    if (it == lookup.end())
      throw DataError("config line " + std::to_string(line_no) +
                      ": unknown key '" + section + "." + key + "'");
    if (auto prev = seen.find({section, key}); prev != seen.end())
      throw DataError("config line " + std::to_string(line_no) +
                      ": duplicate key '" + section + "." + key +
                      "' (first on line " + std::to_string(prev->second) + ")");
    seen[{section, key}] = line_no;
    detail::parse_value(*it->second, value, line_no);
  }
  cfg.validate();
  return cfg;
}

// The environment variable overrides the config path only.
inline std::string resolve_config_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return env;
  return kDefaultConfigName;
}

}  // namespace ttsfront::config
