#pragma once

// Feed-forward layers: linear, same-padded 1-D convolution, embedding
// lookup and tanh. Each layer owns its parameters, and backward
// accumulates into param.grad (callers zero grads at step boundaries).
// Reductions accumulate in double regardless of the scalar type.

#include <random>
#include <vector>

#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::nn {

template <class Real>
struct Linear {
  Tensor<Real> weight;  // [out, in]
  Tensor<Real> bias;    // [out]

  Linear() = default;
  Linear(int in_dim, int out_dim) {
    weight.resize({out_dim, in_dim});
    bias.resize({out_dim});
  }

  void init(std::mt19937& rng, double scale_mult = 1.0) {
    init_uniform(weight, rng,
                 scale_mult * xavier_scale(weight.cols(), weight.rows()));
    std::fill(bias.data.begin(), bias.data.end(), Real(0));
  }

  int in_dim() const { return weight.cols(); }
  int out_dim() const { return weight.rows(); }

  // x: T x in -> T x out
  Tensor<Real> forward(const Tensor<Real>& x) const {
    if (x.cols() != in_dim()) throw DataError("Linear: input dim mismatch");
    Tensor<Real> y({x.rows(), out_dim()});
    for (int t = 0; t < x.rows(); ++t) {
      const Real* xr = x.row(t);
      Real* yr = y.row(t);
      for (int o = 0; o < out_dim(); ++o) {
        const Real* wr = weight.row(o);
        double acc = static_cast<double>(bias.data[o]);
        for (int i = 0; i < in_dim(); ++i)
          acc += static_cast<double>(wr[i]) * static_cast<double>(xr[i]);
        yr[o] = static_cast<Real>(acc);
      }
    }
    return y;
  }

  Tensor<Real> backward(const Tensor<Real>& x, const Tensor<Real>& gout) {
    Tensor<Real> gin({x.rows(), in_dim()});
    for (int t = 0; t < x.rows(); ++t) {
      const Real* xr = x.row(t);
      const Real* gr = gout.row(t);
      Real* gir = gin.row(t);
      for (int o = 0; o < out_dim(); ++o) {
        Real go = gr[o];
        if (go == Real(0)) continue;
        Real* gwr = weight.grow(o);
        const Real* wr = weight.row(o);
        for (int i = 0; i < in_dim(); ++i) {
          gwr[i] += go * xr[i];
          gir[i] += go * wr[i];
        }
        bias.grad[o] += go;
      }
    }
    return gin;
  }

  std::vector<ParamRef<Real>> params(const std::string& prefix) {
    return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
  }
};

// Same-padded cross-correlation along the time axis. Kernel width must
// be odd so output length equals input length.
template <class Real>
struct Conv1d {
  Tensor<Real> weight;  // [out_ch, in_ch, K]
  Tensor<Real> bias;    // [out_ch]

  Conv1d() = default;
  Conv1d(int in_ch, int out_ch, int kernel) {
    if (kernel % 2 == 0)
      throw DataError("Conv1d: kernel width must be odd for same padding");
    weight.resize({out_ch, in_ch, kernel});
    bias.resize({out_ch});
  }

  int in_ch() const { return weight.shape[1]; }
  int out_ch() const { return weight.shape[0]; }
  int kernel() const { return weight.shape[2]; }

  void init(std::mt19937& rng, double scale_mult = 1.0) {
    init_uniform(weight, rng,
                 scale_mult * xavier_scale(in_ch() * kernel(),
                                           out_ch() * kernel()));
    std::fill(bias.data.begin(), bias.data.end(), Real(0));
  }

  Real& w(int co, int ci, int k) {
    return weight
        .data[(static_cast<size_t>(co) * in_ch() + ci) * kernel() + k];
  }
  const Real& w(int co, int ci, int k) const {
    return weight
        .data[(static_cast<size_t>(co) * in_ch() + ci) * kernel() + k];
  }
  Real& gw(int co, int ci, int k) {
    return weight
        .grad[(static_cast<size_t>(co) * in_ch() + ci) * kernel() + k];
  }

  // x: T x in_ch -> T x out_ch, zero padding outside [0, T).
  Tensor<Real> forward(const Tensor<Real>& x) const {
    if (x.cols() != in_ch()) throw DataError("Conv1d: input dim mismatch");
    int T = x.rows(), K = kernel(), half = K / 2;
    Tensor<Real> y({T, out_ch()});
    for (int t = 0; t < T; ++t) {
      Real* yr = y.row(t);
      for (int co = 0; co < out_ch(); ++co) {
        double acc = static_cast<double>(bias.data[co]);
        for (int k = 0; k < K; ++k) {
          int src = t + k - half;
          if (src < 0 || src >= T) continue;
          const Real* xr = x.row(src);
          for (int ci = 0; ci < in_ch(); ++ci)
            acc += static_cast<double>(w(co, ci, k)) *
                   static_cast<double>(xr[ci]);
        }
        yr[co] = static_cast<Real>(acc);
      }
    }
    return y;
  }

  Tensor<Real> backward(const Tensor<Real>& x, const Tensor<Real>& gout) {
    int T = x.rows(), K = kernel(), half = K / 2;
    Tensor<Real> gin({T, in_ch()});
    for (int t = 0; t < T; ++t) {
      const Real* gr = gout.row(t);
      for (int co = 0; co < out_ch(); ++co) {
        Real go = gr[co];
        if (go == Real(0)) continue;
        bias.grad[co] += go;
        for (int k = 0; k < K; ++k) {
          int src = t + k - half;
          if (src < 0 || src >= T) continue;
          const Real* xr = x.row(src);
          Real* gir = gin.row(src);
          for (int ci = 0; ci < in_ch(); ++ci) {
            gw(co, ci, k) += go * xr[ci];
            gir[ci] += go * w(co, ci, k);
          }
        }
      }
    }
    return gin;
  }

  std::vector<ParamRef<Real>> params(const std::string& prefix) {
    return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
  }
};

template <class Real>
struct Embedding {
  Tensor<Real> table;  // [vocab, dim]

  Embedding() = default;
  Embedding(int vocab, int dim) { table.resize({vocab, dim}); }

  int vocab() const { return table.rows(); }
  int dim() const { return table.cols(); }

  void init(std::mt19937& rng, double scale = 0.1) {
    init_uniform(table, rng, scale);
  }

  Tensor<Real> forward(const std::vector<int>& ids) const {
    Tensor<Real> y({static_cast<int>(ids.size()), dim()});
    for (size_t t = 0; t < ids.size(); ++t) {
      if (ids[t] < 0 || ids[t] >= vocab())
        throw DataError("Embedding: id out of range");
      const Real* src = table.row(ids[t]);
      std::copy(src, src + dim(), y.row(static_cast<int>(t)));
    }
    return y;
  }

  void backward(const std::vector<int>& ids, const Tensor<Real>& gout) {
    for (size_t t = 0; t < ids.size(); ++t) {
      const Real* gr = gout.row(static_cast<int>(t));
      Real* dst = table.grow(ids[t]);
      for (int i = 0; i < dim(); ++i) dst[i] += gr[i];
    }
  }

  std::vector<ParamRef<Real>> params(const std::string& prefix) {
    return {{prefix + ".table", &table}};
  }
};

// Elementwise tanh. backward takes the forward *output*.
template <class Real>
Tensor<Real> tanh_forward(const Tensor<Real>& x) {
  Tensor<Real> y(x.shape);
  for (size_t i = 0; i < x.size(); ++i)
    y.data[i] = static_cast<Real>(std::tanh(static_cast<double>(x.data[i])));
  return y;
}

template <class Real>
Tensor<Real> tanh_backward(const Tensor<Real>& y, const Tensor<Real>& gout) {
  Tensor<Real> gin(y.shape);
  for (size_t i = 0; i < y.size(); ++i)
    gin.data[i] = gout.data[i] * (Real(1) - y.data[i] * y.data[i]);
  return gin;
}

// Column-wise concatenation [A | B] and its split backward.
template <class Real>
Tensor<Real> concat_cols(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rows() != b.rows()) throw DataError("concat_cols: row mismatch");
  Tensor<Real> y({a.rows(), a.cols() + b.cols()});
  for (int t = 0; t < a.rows(); ++t) {
    std::copy(a.row(t), a.row(t) + a.cols(), y.row(t));
    std::copy(b.row(t), b.row(t) + b.cols(), y.row(t) + a.cols());
  }
  return y;
}

template <class Real>
void split_cols_backward(const Tensor<Real>& gout, Tensor<Real>* ga,
                         Tensor<Real>* gb) {
  int ca = ga->cols();
  for (int t = 0; t < gout.rows(); ++t) {
    const Real* gr = gout.row(t);
    Real* ar = ga->row(t);
    Real* br = gb->row(t);
    for (int i = 0; i < ca; ++i) ar[i] += gr[i];
    for (int i = 0; i < gb->cols(); ++i) br[i] += gr[ca + i];
  }
}

}  // namespace ttsfront::nn
