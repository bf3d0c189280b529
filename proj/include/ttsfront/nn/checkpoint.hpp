#pragma once

// NNC1 checkpoint container: magic "NNC1", u32 tensor count, then per
// tensor a (name, shape, f32 little-endian payload) record. Values are
// stored as f32; float-parameter models round-trip bit-exactly.

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"
#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::nn {

struct RawTensor {
  std::vector<int> shape;
  std::vector<float> data;
};

template <class Real>
void save_checkpoint(const std::string& path,
                     const std::vector<ParamRef<Real>>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot create checkpoint file: " + path);
  os.write("NNC1", 4);
  write_u32(os, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    if (p.name.size() > 0xffff)
      throw DataError("checkpoint: parameter name too long");
    write_u16(os, static_cast<uint16_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u8(os, static_cast<uint8_t>(p.tensor->shape.size()));
    for (int d : p.tensor->shape) write_u32(os, static_cast<uint32_t>(d));
    for (Real v : p.tensor->data) write_f32(os, static_cast<float>(v));
  }
  if (!os) throw DataError("checkpoint write failed: " + path);
}

inline std::map<std::string, RawTensor> load_checkpoint_raw(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint file: " + path);
  expect_magic(is, "NNC1", "checkpoint " + path);
  uint32_t count = read_u32(is, "checkpoint tensor count");
  std::map<std::string, RawTensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len = read_u16(is, "checkpoint name length");
    std::string name(name_len, '\0');
    read_exact(is, name.data(), name_len, "checkpoint name");
    uint8_t ndim = read_u8(is, "checkpoint rank");
    RawTensor rt;
    size_t n = 1;
    for (uint8_t d = 0; d < ndim; ++d) {
      uint32_t dim = read_u32(is, "checkpoint shape");
      rt.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    rt.data.resize(n);
    for (size_t k = 0; k < n; ++k)
      rt.data[k] = read_f32(is, "checkpoint payload of '" + name + "'");
    if (!out.emplace(name, std::move(rt)).second)
      throw DataError("checkpoint: duplicate tensor name '" + name + "'");
  }
  return out;
}

// Fills an existing parameter list; every parameter must be present
// with a matching shape.
template <class Real>
void load_checkpoint(const std::string& path,
                     const std::vector<ParamRef<Real>>& params) {
  auto raw = load_checkpoint_raw(path);
  for (const auto& p : params) {
    auto it = raw.find(p.name);
    if (it == raw.end())
      throw DataError("checkpoint " + path + ": missing tensor '" + p.name +
                      "'");
    if (it->second.shape != p.tensor->shape)
      throw DataError("checkpoint " + path + ": shape mismatch for '" +
                      p.name + "'");
    for (size_t i = 0; i < p.tensor->size(); ++i)
      p.tensor->data[i] = static_cast<Real>(it->second.data[i]);
  }
}

// In-memory snapshot, used by trainers for best-checkpoint retention.
template <class Real>
std::vector<std::vector<Real>> snapshot_params(
    const std::vector<ParamRef<Real>>& params) {
  std::vector<std::vector<Real>> out;
  for (const auto& p : params) out.push_back(p.tensor->data);
  return out;
}

template <class Real>
void restore_params(const std::vector<ParamRef<Real>>& params,
                    const std::vector<std::vector<Real>>& snapshot) {
  if (snapshot.size() != params.size())
    throw DataError("restore_params: snapshot size mismatch");
  for (size_t i = 0; i < params.size(); ++i) params[i].tensor->data = snapshot[i];
}

}  // namespace ttsfront::nn
