#pragma once

// Dense row-major tensor with a same-shape gradient accumulator. The
// whole nn stack is templated on the scalar type: training instantiates
// float, finite-difference checking instantiates double.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"

namespace ttsfront::nn {

template <class Real>
struct Tensor {
  std::vector<int> shape;
  std::vector<Real> data;
  std::vector<Real> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp) { resize(std::move(shp)); }

  void resize(std::vector<int> shp) {
    shape = std::move(shp);
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    data.assign(n, Real(0));
    grad.assign(n, Real(0));
  }

  size_t size() const { return data.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), Real(0)); }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  Real* row(int r) { return data.data() + static_cast<size_t>(r) * cols(); }
  const Real* row(int r) const {
    return data.data() + static_cast<size_t>(r) * cols();
  }
  Real* grow(int r) { return grad.data() + static_cast<size_t>(r) * cols(); }
  const Real* grow(int r) const {
    return grad.data() + static_cast<size_t>(r) * cols();
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// Named handle on a parameter tensor; the unit the optimizer, the
// checkpoint writer and the gradient checker all operate on.
template <class Real>
struct ParamRef {
  std::string name;
  Tensor<Real>* tensor;
};

// First occurrence wins on ties, i.e. the lowest column index.
template <class Real>
int argmax_row(const Tensor<Real>& t, int r) {
  const Real* row = t.row(r);
  int best = 0;
  for (int k = 1; k < t.cols(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

template <class Real>
size_t param_count(const std::vector<ParamRef<Real>>& params) {
  size_t n = 0;
  for (const auto& p : params) n += p.tensor->size();
  return n;
}

template <class Real>
void zero_grads(const std::vector<ParamRef<Real>>& params) {
  for (const auto& p : params) p.tensor->zero_grad();
}

// ---------------------------------------------------------------------------
// Initializers. All take an explicit engine so runs are reproducible.

template <class Real>
void init_uniform(Tensor<Real>& t, std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& v : t.data) v = static_cast<Real>(dist(rng));
}

inline double xavier_scale(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

}  // namespace ttsfront::nn
