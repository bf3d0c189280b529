#pragma once

// LSTM with exact backpropagation through time, and the bidirectional
// wrapper that concatenates a forward and a time-reversed pass.

#include <random>
#include <vector>

#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::nn {

namespace detail {
template <class Real>
Real sigmoid(Real x) {
  // computed in double; stable for large |x|
  double v = static_cast<double>(x);
  if (v >= 0) {
    double e = std::exp(-v);
    return static_cast<Real>(1.0 / (1.0 + e));
  }
  double e = std::exp(v);
  return static_cast<Real>(e / (1.0 + e));
}
}  // namespace detail

// Gate order in the stacked weight matrices: input, forget, cell, output.
template <class Real>
struct Lstm {
  Tensor<Real> w_in;   // [4H, D]
  Tensor<Real> w_rec;  // [4H, H]
  Tensor<Real> bias;   // [4H]
  int hidden = 0;

  struct Cache {
    Tensor<Real> gates;  // T x 4H, post-activation (i, f, g, o)
    Tensor<Real> cell;   // T x H
    Tensor<Real> out;    // T x H
  };

  Lstm() = default;
  Lstm(int in_dim, int hidden_dim) : hidden(hidden_dim) {
    w_in.resize({4 * hidden_dim, in_dim});
    w_rec.resize({4 * hidden_dim, hidden_dim});
    bias.resize({4 * hidden_dim});
  }

  int in_dim() const { return w_in.cols(); }

  void init(std::mt19937& rng) {
    init_uniform(w_in, rng, xavier_scale(in_dim(), hidden));
    init_uniform(w_rec, rng, xavier_scale(hidden, hidden));
    std::fill(bias.data.begin(), bias.data.end(), Real(0));
    // forget-gate bias at 1 keeps early cell state alive
    for (int h = 0; h < hidden; ++h) bias.data[hidden + h] = Real(1);
  }

  Tensor<Real> forward(const Tensor<Real>& x, Cache* cache) const {
    if (x.cols() != in_dim()) throw DataError("Lstm: input dim mismatch");
    int T = x.rows(), H = hidden;
    cache->gates.resize({T, 4 * H});
    cache->cell.resize({T, H});
    cache->out.resize({T, H});
    std::vector<double> pre(4 * H);
    for (int t = 0; t < T; ++t) {
      const Real* xr = x.row(t);
      const Real* h_prev = t > 0 ? cache->out.row(t - 1) : nullptr;
      for (int r = 0; r < 4 * H; ++r) {
        double acc = static_cast<double>(bias.data[r]);
        const Real* wi = w_in.row(r);
        for (int i = 0; i < in_dim(); ++i)
          acc += static_cast<double>(wi[i]) * static_cast<double>(xr[i]);
        if (h_prev) {
          const Real* wr = w_rec.row(r);
          for (int i = 0; i < H; ++i)
            acc += static_cast<double>(wr[i]) * static_cast<double>(h_prev[i]);
        }
        pre[r] = acc;
      }
      Real* gate = cache->gates.row(t);
      Real* cell = cache->cell.row(t);
      Real* out = cache->out.row(t);
      const Real* c_prev = t > 0 ? cache->cell.row(t - 1) : nullptr;
      for (int h = 0; h < H; ++h) {
        Real ig = detail::sigmoid(static_cast<Real>(pre[h]));
        Real fg = detail::sigmoid(static_cast<Real>(pre[H + h]));
        Real gg = static_cast<Real>(std::tanh(pre[2 * H + h]));
        Real og = detail::sigmoid(static_cast<Real>(pre[3 * H + h]));
        gate[h] = ig;
        gate[H + h] = fg;
        gate[2 * H + h] = gg;
        gate[3 * H + h] = og;
        Real c = ig * gg + (c_prev ? fg * c_prev[h] : Real(0));
        cell[h] = c;
        out[h] = og * static_cast<Real>(std::tanh(static_cast<double>(c)));
      }
    }
    return cache->out;
  }

  // gout: T x H gradient on the hidden outputs. Returns gradient on x
  // and accumulates parameter gradients.
  Tensor<Real> backward(const Tensor<Real>& x, const Cache& cache,
                        const Tensor<Real>& gout) {
    int T = x.rows(), H = hidden;
    Tensor<Real> gin({T, in_dim()});
    std::vector<Real> dh(H, Real(0));   // dL/dh_t flowing from t+1
    std::vector<Real> dc(H, Real(0));   // dL/dc_t flowing from t+1
    std::vector<Real> dpre(4 * H);      // dL/d(pre-activations) at t
    for (int t = T - 1; t >= 0; --t) {
      const Real* gate = cache.gates.row(t);
      const Real* cell = cache.cell.row(t);
      const Real* c_prev = t > 0 ? cache.cell.row(t - 1) : nullptr;
      const Real* gr = gout.row(t);
      for (int h = 0; h < H; ++h) {
        Real dh_total = gr[h] + dh[h];
        Real ig = gate[h], fg = gate[H + h], gg = gate[2 * H + h],
             og = gate[3 * H + h];
        Real tc = static_cast<Real>(std::tanh(static_cast<double>(cell[h])));
        Real do_ = dh_total * tc;
        Real dc_total = dh_total * og * (Real(1) - tc * tc) + dc[h];
        Real di = dc_total * gg;
        Real df = c_prev ? dc_total * c_prev[h] : Real(0);
        Real dg = dc_total * ig;
        dpre[h] = di * ig * (Real(1) - ig);
        dpre[H + h] = df * fg * (Real(1) - fg);
        dpre[2 * H + h] = dg * (Real(1) - gg * gg);
        dpre[3 * H + h] = do_ * og * (Real(1) - og);
        dc[h] = dc_total * fg;
      }
      const Real* xr = x.row(t);
      const Real* h_prev = t > 0 ? cache.out.row(t - 1) : nullptr;
      std::fill(dh.begin(), dh.end(), Real(0));
      Real* gir = gin.row(t);
      for (int r = 0; r < 4 * H; ++r) {
        Real dp = dpre[r];
        if (dp == Real(0)) continue;
        bias.grad[r] += dp;
        Real* gwi = w_in.grow(r);
        const Real* wi = w_in.row(r);
        for (int i = 0; i < in_dim(); ++i) {
          gwi[i] += dp * xr[i];
          gir[i] += dp * wi[i];
        }
        if (h_prev) {
          Real* gwr = w_rec.grow(r);
          const Real* wr = w_rec.row(r);
          for (int i = 0; i < H; ++i) {
            gwr[i] += dp * h_prev[i];
            dh[i] += dp * wr[i];
          }
        }
      }
    }
    return gin;
  }

  std::vector<ParamRef<Real>> params(const std::string& prefix) {
    return {{prefix + ".w_in", &w_in},
            {prefix + ".w_rec", &w_rec},
            {prefix + ".bias", &bias}};
  }
};

template <class Real>
Tensor<Real> reverse_rows(const Tensor<Real>& x) {
  Tensor<Real> y(x.shape);
  for (int t = 0; t < x.rows(); ++t)
    std::copy(x.row(t), x.row(t) + x.cols(), y.row(x.rows() - 1 - t));
  return y;
}

// Forward and time-reversed LSTM; per-step outputs concatenated to 2H.
template <class Real>
struct BiLstm {
  Lstm<Real> fwd;
  Lstm<Real> bwd;

  struct Cache {
    typename Lstm<Real>::Cache fwd_cache;
    typename Lstm<Real>::Cache bwd_cache;
    Tensor<Real> x_rev;
  };

  BiLstm() = default;
  BiLstm(int in_dim, int hidden_dim)
      : fwd(in_dim, hidden_dim), bwd(in_dim, hidden_dim) {}

  int in_dim() const { return fwd.in_dim(); }
  int out_dim() const { return 2 * fwd.hidden; }

  void init(std::mt19937& rng) {
    fwd.init(rng);
    bwd.init(rng);
  }

  Tensor<Real> forward(const Tensor<Real>& x, Cache* cache) const {
    Tensor<Real> hf = fwd.forward(x, &cache->fwd_cache);
    cache->x_rev = reverse_rows(x);
    Tensor<Real> hb_rev = bwd.forward(cache->x_rev, &cache->bwd_cache);
    Tensor<Real> hb = reverse_rows(hb_rev);
    Tensor<Real> y({x.rows(), out_dim()});
    int H = fwd.hidden;
    for (int t = 0; t < x.rows(); ++t) {
      std::copy(hf.row(t), hf.row(t) + H, y.row(t));
      std::copy(hb.row(t), hb.row(t) + H, y.row(t) + H);
    }
    return y;
  }

  Tensor<Real> backward(const Tensor<Real>& x, const Cache& cache,
                        const Tensor<Real>& gout) {
    int T = x.rows(), H = fwd.hidden;
    Tensor<Real> gf({T, H}), gb_rev({T, H});
    for (int t = 0; t < T; ++t) {
      const Real* gr = gout.row(t);
      std::copy(gr, gr + H, gf.row(t));
      // reversed-direction gradient goes back into reversed time
      std::copy(gr + H, gr + 2 * H, gb_rev.row(T - 1 - t));
    }
    Tensor<Real> gin = fwd.backward(x, cache.fwd_cache, gf);
    Tensor<Real> gin_rev = bwd.backward(cache.x_rev, cache.bwd_cache, gb_rev);
    for (int t = 0; t < T; ++t) {
      const Real* src = gin_rev.row(T - 1 - t);
      Real* dst = gin.row(t);
      for (int i = 0; i < gin.cols(); ++i) dst[i] += src[i];
    }
    return gin;
  }

  std::vector<ParamRef<Real>> params(const std::string& prefix) {
    auto p = fwd.params(prefix + ".fwd");
    auto q = bwd.params(prefix + ".bwd");
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }
};

}  // namespace ttsfront::nn
