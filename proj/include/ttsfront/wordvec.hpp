#pragma once

// Precomputed word-embedding tables. Embeddings come from an offline
// transformer run; this code only stores, validates and reduces them.
// Two file layouts: "WEB1" already has one row per word; "WES1" has a
// raw subtoken stream plus a per-word subtoken index table, reduced on
// load with the first-subtoken rule.

#include <fstream>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::wordvec {

// Per word: indices into the raw subtoken stream.
using SubtokenMap = std::vector<std::vector<uint32_t>>;

inline void validate_subtoken_map(const SubtokenMap& map, uint32_t n_raw) {
  std::vector<bool> used(n_raw, false);
  for (size_t w = 0; w < map.size(); ++w) {
    if (map[w].empty())
      throw DataError("subtoken map: word " + std::to_string(w) +
                      " has no subtokens");
    uint32_t prev = 0;
    bool first = true;
    for (uint32_t idx : map[w]) {
      if (idx >= n_raw)
        throw DataError("subtoken map: index " + std::to_string(idx) +
                        " out of range for " + std::to_string(n_raw) +
                        " raw rows");
      if (!first && idx <= prev)
        throw DataError("subtoken map: word " + std::to_string(w) +
                        " indices not strictly increasing");
      if (used[idx])
        throw DataError("subtoken map: index " + std::to_string(idx) +
                        " assigned to two words");
      used[idx] = true;
      prev = idx;
      first = false;
    }
  }
}

// Word vector = raw vector at the word's first subtoken index.
inline nn::Tensor<float> reduce_subtokens(const nn::Tensor<float>& raw,
                                          const SubtokenMap& map) {
  validate_subtoken_map(map, static_cast<uint32_t>(raw.rows()));
  nn::Tensor<float> out({static_cast<int>(map.size()), raw.cols()});
  for (size_t w = 0; w < map.size(); ++w) {
    const float* src = raw.row(static_cast<int>(map[w].front()));
    float* dst = out.row(static_cast<int>(w));
    for (int d = 0; d < raw.cols(); ++d) dst[d] = src[d];
  }
  return out;
}

// ---------------------------------------------------------------------------
// WEB1: magic, u32 n_words, u32 D_w, f32 rows.

inline void write_web1(const std::string& path,
                       const nn::Tensor<float>& vectors) {
  if (vectors.shape.size() != 2)
    throw DataError("write_web1: vectors must be 2-d");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write word-embedding file: " + path);
  out.write("WEB1", 4);
  write_u32(out, static_cast<uint32_t>(vectors.rows()));
  write_u32(out, static_cast<uint32_t>(vectors.cols()));
  for (float v : vectors.data) write_f32(out, v);
  if (!out) throw DataError("write failed: " + path);
}

// WES1: magic, u32 n_words, u32 n_raw, u32 D_w, per word u32 count +
// u32 indices, then n_raw f32 rows.

inline void write_wes1(const std::string& path, const nn::Tensor<float>& raw,
                       const SubtokenMap& map) {
  if (raw.shape.size() != 2) throw DataError("write_wes1: raw must be 2-d");
  validate_subtoken_map(map, static_cast<uint32_t>(raw.rows()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write word-embedding file: " + path);
  out.write("WES1", 4);
  write_u32(out, static_cast<uint32_t>(map.size()));
  write_u32(out, static_cast<uint32_t>(raw.rows()));
  write_u32(out, static_cast<uint32_t>(raw.cols()));
  for (const auto& idxs : map) {
    write_u32(out, static_cast<uint32_t>(idxs.size()));
    for (uint32_t idx : idxs) write_u32(out, idx);
  }
  for (float v : raw.data) write_f32(out, v);
  if (!out) throw DataError("write failed: " + path);
}

// Reads either layout and returns one row per word (WES1 rows pass
// through reduce_subtokens).
inline nn::Tensor<float> read_word_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open word-embedding file: " + path);
  char magic[4];
  read_exact(in, magic, 4, path);
  if (std::string(magic, 4) == "WEB1") {
    uint32_t n = read_u32(in, path);
    uint32_t d = read_u32(in, path);
    nn::Tensor<float> vectors({static_cast<int>(n), static_cast<int>(d)});
    for (auto& v : vectors.data) v = read_f32(in, path);
    return vectors;
  }
  if (std::string(magic, 4) == "WES1") {
    uint32_t n_words = read_u32(in, path);
    uint32_t n_raw = read_u32(in, path);
    uint32_t d = read_u32(in, path);
    SubtokenMap map(n_words);
    for (auto& idxs : map) {
      uint32_t count = read_u32(in, path);
      idxs.resize(count);
      for (auto& idx : idxs) idx = read_u32(in, path);
    }
    nn::Tensor<float> raw({static_cast<int>(n_raw), static_cast<int>(d)});
    for (auto& v : raw.data) v = read_f32(in, path);
    try {
      return reduce_subtokens(raw, map);
    } catch (const DataError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  throw DataError(path + ": bad magic, expected WEB1 or WES1");
}

}  // namespace ttsfront::wordvec
