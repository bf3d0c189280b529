#pragma once

// Shared error types, frame arithmetic and small IO helpers used by
// every other module.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttsfront {

// Bad or inconsistent input data: unparsable files, wrong magic, shape
// mismatches, missing features. Mapped to exit code 2 by the CLI.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure during training or checking: non-finite loss, failed
// gradient pre-flight. Mapped to exit code 3 by the CLI.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shared frame rounding rule. Every producer of frame-level data
// (durations, pitch, mel) uses this so frame counts agree for the same
// span and hop.
inline long frame_count(double span_s, double hop_s) {
  return std::llround(span_s / hop_s);
}

inline long frame_count_samples(long n_samples, int sample_rate, double hop_s) {
  return frame_count(static_cast<double>(n_samples) / sample_rate, hop_s);
}

// ---------------------------------------------------------------------------
// Little-endian binary IO. All on-disk formats (PTK1, CND1, WEB1, NNC1)
// are little-endian regardless of host order.

inline void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline void write_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_f32(std::ostream& os, float v) {
  uint32_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

// Reads exactly n bytes or throws a DataError naming the shortfall.
inline void read_exact(std::istream& is, char* dst, size_t n,
                       const std::string& what) {
  is.read(dst, static_cast<std::streamsize>(n));
  size_t got = static_cast<size_t>(is.gcount());
  if (got != n) {
    std::ostringstream msg;
    msg << "truncated " << what << ": expected " << n << " bytes, got " << got;
    throw DataError(msg.str());
  }
}

inline uint32_t read_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  read_exact(is, reinterpret_cast<char*>(b), 4, what);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

inline uint16_t read_u16(std::istream& is, const std::string& what) {
  unsigned char b[2];
  read_exact(is, reinterpret_cast<char*>(b), 2, what);
  return static_cast<uint16_t>(b[0]) |
         static_cast<uint16_t>(static_cast<uint16_t>(b[1]) << 8);
}

inline uint8_t read_u8(std::istream& is, const std::string& what) {
  char c;
  read_exact(is, &c, 1, what);
  return static_cast<uint8_t>(c);
}

inline float read_f32(std::istream& is, const std::string& what) {
  uint32_t bits = read_u32(is, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void expect_magic(std::istream& is, const char magic[4],
                         const std::string& what) {
  char got[5] = {0, 0, 0, 0, 0};
  read_exact(is, got, 4, what + " magic");
  if (std::memcmp(got, magic, 4) != 0) {
    throw DataError("bad magic in " + what + ": expected '" +
                    std::string(magic, 4) + "', got '" + std::string(got, 4) +
                    "'");
  }
}

// ---------------------------------------------------------------------------
// UTF-8 handling. Graphemes are Unicode code points; inputs are UTF-8.

inline std::vector<uint32_t> utf8_decode(const std::string& s) {
  std::vector<uint32_t> out;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    uint32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      throw DataError("invalid UTF-8 byte at offset " + std::to_string(i));
    }
    if (i + extra >= s.size())
      throw DataError("truncated UTF-8 sequence at offset " +
                      std::to_string(i));
    for (int k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2)
        throw DataError("invalid UTF-8 continuation at offset " +
                        std::to_string(i + k));
      cp = (cp << 6) | (cc & 0x3f);
    }
    out.push_back(cp);
    i += 1 + extra;
  }
  return out;
}

inline std::string utf8_encode(uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
  return out;
}

// Letters and digits count as word material; everything else (ASCII
// punctuation, space, and a small set of common non-ASCII punctuation
// marks) is treated as punctuation. Non-ASCII code points outside the
// known set default to letters, which covers accented characters.
inline bool is_punctuation_cp(uint32_t cp) {
  if (cp < 0x80) {
    return !((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
             (cp >= '0' && cp <= '9'));
  }
  switch (cp) {
    case 0x00A0:  // no-break space
    case 0x00AB:  // left guillemet
    case 0x00BB:  // right guillemet
    case 0x00BF:  // inverted question mark
    case 0x00A1:  // inverted exclamation mark
    case 0x2013:  // en dash
    case 0x2014:  // em dash
    case 0x2018:
    case 0x2019:  // curly single quotes
    case 0x201C:
    case 0x201D:  // curly double quotes
    case 0x2026:  // ellipsis
      return true;
    default:
      return false;
  }
}

// FNV-1a 64-bit, seed-mixed. Platform-stable; used for seeded corpus
// splits so the result depends only on (id, seed).
inline uint64_t stable_hash(const std::string& s, uint64_t seed) {
  uint64_t h = 14695981039346656037ull ^ (seed * 0x9E3779B97F4A7C15ull);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  // final avalanche (splitmix64 tail)
  h ^= h >> 30;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 27;
  h *= 0x94D049BB133111EBull;
  h ^= h >> 31;
  return h;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Tokens stored in whitespace-separated text files write the space
// token as a sentinel.
inline std::string escape_token(const std::string& tok) {
  return tok == " " ? "<sp>" : tok;
}

inline std::string unescape_token(const std::string& tok) {
  return tok == "<sp>" ? " " : tok;
}

}  // namespace ttsfront
