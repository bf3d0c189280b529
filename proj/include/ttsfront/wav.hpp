#pragma once

// Minimal RIFF/WAV reader and writer for 16-bit PCM mono files.
// Resampling and multi-channel audio are out of scope; anything that is
// not PCM16 mono is rejected.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"

namespace ttsfront::wav {

struct Audio {
  int sample_rate = 0;
  std::vector<float> samples;  // in [-1, 1]
};

struct Info {
  int sample_rate = 0;
  long n_samples = 0;
};

namespace detail {

struct ChunkHeader {
  char id[4];
  uint32_t size;
};

inline bool read_chunk_header(std::istream& is, ChunkHeader* h) {
  is.read(h->id, 4);
  if (is.gcount() != 4) return false;
  h->size = read_u32(is, "WAV chunk size");
  return true;
}

struct Fmt {
  uint16_t audio_format = 0;
  uint16_t num_channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

// Scans chunks for fmt and data; leaves the stream positioned at the
// start of the data payload. Returns the data byte count.
inline uint32_t scan_to_data(std::istream& is, const std::string& path,
                             Fmt* fmt) {
  char riff[4], wave[4];
  is.read(riff, 4);
  if (is.gcount() != 4 || std::memcmp(riff, "RIFF", 4) != 0)
    throw DataError("not a RIFF file: " + path);
  read_u32(is, "RIFF size");
  is.read(wave, 4);
  if (is.gcount() != 4 || std::memcmp(wave, "WAVE", 4) != 0)
    throw DataError("not a WAVE file: " + path);

  bool have_fmt = false;
  ChunkHeader h;
  while (read_chunk_header(is, &h)) {
    if (std::memcmp(h.id, "fmt ", 4) == 0) {
      if (h.size < 16) throw DataError("short fmt chunk in " + path);
      fmt->audio_format = read_u16(is, "fmt");
      fmt->num_channels = read_u16(is, "fmt");
      fmt->sample_rate = read_u32(is, "fmt");
      read_u32(is, "fmt");  // byte rate
      read_u16(is, "fmt");  // block align
      fmt->bits_per_sample = read_u16(is, "fmt");
      if (h.size > 16) is.seekg(h.size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(h.id, "data", 4) == 0) {
      if (!have_fmt) throw DataError("data chunk before fmt in " + path);
      if (fmt->audio_format != 1 || fmt->bits_per_sample != 16)
        throw DataError("unsupported WAV encoding (need PCM16): " + path);
      if (fmt->num_channels != 1)
        throw DataError("unsupported channel count (need mono): " + path);
      return h.size;
    } else {
      is.seekg(h.size + (h.size & 1), std::ios::cur);
    }
  }
  throw DataError("no data chunk in WAV file: " + path);
}

}  // namespace detail

// Reads only the header; used by the corpus loader, which needs sample
// counts without touching sample data.
inline Info read_info(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open WAV file: " + path);
  detail::Fmt fmt;
  uint32_t data_bytes = detail::scan_to_data(is, path, &fmt);
  Info info;
  info.sample_rate = static_cast<int>(fmt.sample_rate);
  info.n_samples = static_cast<long>(data_bytes / 2);
  return info;
}

inline Audio read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open WAV file: " + path);
  detail::Fmt fmt;
  uint32_t data_bytes = detail::scan_to_data(is, path, &fmt);
  Audio audio;
  audio.sample_rate = static_cast<int>(fmt.sample_rate);
  size_t n = data_bytes / 2;
  audio.samples.resize(n);
  std::vector<char> raw(data_bytes);
  read_exact(is, raw.data(), data_bytes, "WAV sample data of " + path);
  for (size_t i = 0; i < n; ++i) {
    int16_t s = static_cast<int16_t>(
        static_cast<uint16_t>(static_cast<unsigned char>(raw[2 * i])) |
        (static_cast<uint16_t>(static_cast<unsigned char>(raw[2 * i + 1]))
         << 8));
    audio.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return audio;
}

inline void write(const std::string& path, const std::vector<float>& samples,
                  int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot create WAV file: " + path);
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  write_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32(os, 16);
  write_u16(os, 1);  // PCM
  write_u16(os, 1);  // mono
  write_u32(os, static_cast<uint32_t>(sample_rate));
  write_u32(os, static_cast<uint32_t>(sample_rate * 2));
  write_u16(os, 2);
  write_u16(os, 16);
  os.write("data", 4);
  write_u32(os, data_bytes);
  for (float v : samples) {
    float c = std::clamp(v, -1.0f, 1.0f);
    int16_t s = static_cast<int16_t>(std::lround(c * 32767.0f));
    write_u16(os, static_cast<uint16_t>(s));
  }
  if (!os) throw DataError("write failed: " + path);
}

}  // namespace ttsfront::wav
