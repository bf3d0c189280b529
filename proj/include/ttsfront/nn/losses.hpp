#pragma once

// Scalar losses with analytic backward passes. All are numerically
// stable (log-sum-exp softmax, logit-space BCE) and computed with
// double accumulation. Each returns the scalar loss and accumulates
// d(loss)/d(input) into the caller's gradient tensor.

#include <cmath>
#include <vector>

#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::nn {

template <class Real>
void check_finite(const Tensor<Real>& t, const char* what) {
  for (Real v : t.data)
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericError(std::string("non-finite value in ") + what);
}

// Row-wise softmax via log-sum-exp.
template <class Real>
Tensor<Real> softmax_rows(const Tensor<Real>& logits) {
  Tensor<Real> out(logits.shape);
  int K = logits.cols();
  for (int r = 0; r < logits.rows(); ++r) {
    const Real* z = logits.row(r);
    double zmax = static_cast<double>(z[0]);
    for (int k = 1; k < K; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += std::exp(static_cast<double>(z[k]) - zmax);
    double logz = zmax + std::log(sum);
    Real* o = out.row(r);
    for (int k = 0; k < K; ++k)
      o[k] = static_cast<Real>(std::exp(static_cast<double>(z[k]) - logz));
  }
  return out;
}

// Mean cross-entropy over rows; gold[r] is the target class of row r.
// glogits (same shape) receives (softmax - onehot) / N.
template <class Real>
double softmax_cross_entropy(const Tensor<Real>& logits,
                             const std::vector<int>& gold,
                             Tensor<Real>* glogits) {
  check_finite(logits, "softmax_cross_entropy logits");
  int N = logits.rows(), K = logits.cols();
  if (static_cast<int>(gold.size()) != N)
    throw DataError("softmax_cross_entropy: target count mismatch");
  double total = 0.0;
  for (int r = 0; r < N; ++r) {
    if (gold[r] < 0 || gold[r] >= K)
      throw DataError("softmax_cross_entropy: class out of range");
    const Real* z = logits.row(r);
    double zmax = static_cast<double>(z[0]);
    for (int k = 1; k < K; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += std::exp(static_cast<double>(z[k]) - zmax);
    double logz = zmax + std::log(sum);
    total += logz - static_cast<double>(z[gold[r]]);
    if (glogits) {
      Real* g = glogits->row(r);
      for (int k = 0; k < K; ++k) {
        double p = std::exp(static_cast<double>(z[k]) - logz);
        g[k] += static_cast<Real>((p - (k == gold[r] ? 1.0 : 0.0)) / N);
      }
    }
  }
  return total / N;
}

template <class Real>
Real sigmoid_scalar(Real x) {
  double v = static_cast<double>(x);
  if (v >= 0) return static_cast<Real>(1.0 / (1.0 + std::exp(-v)));
  double e = std::exp(v);
  return static_cast<Real>(e / (1.0 + e));
}

// Mean binary cross-entropy in logit space. targets in {0, 1}.
// glogits receives (sigmoid(x) - y) / N.
template <class Real>
double sigmoid_bce(const Tensor<Real>& logits, const std::vector<Real>& targets,
                   Tensor<Real>* glogits) {
  check_finite(logits, "sigmoid_bce logits");
  size_t N = logits.size();
  if (targets.size() != N) throw DataError("sigmoid_bce: target count mismatch");
  double total = 0.0;
  for (size_t i = 0; i < N; ++i) {
    double x = static_cast<double>(logits.data[i]);
    double y = static_cast<double>(targets[i]);
    total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    if (glogits)
      glogits->data[i] += static_cast<Real>(
          (static_cast<double>(sigmoid_scalar(logits.data[i])) - y) / N);
  }
  return total / static_cast<double>(N);
}

// Mean squared error over all elements; gpred receives 2(p - t) / N.
template <class Real>
double mse(const Tensor<Real>& pred, const Tensor<Real>& target,
           Tensor<Real>* gpred) {
  check_finite(pred, "mse pred");
  if (!pred.same_shape(target)) throw DataError("mse: shape mismatch");
  size_t N = pred.size();
  if (N == 0) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < N; ++i) {
    double d = static_cast<double>(pred.data[i]) -
               static_cast<double>(target.data[i]);
    total += d * d;
    if (gpred) gpred->data[i] += static_cast<Real>(2.0 * d / N);
  }
  return total / static_cast<double>(N);
}

// Mean absolute error; gpred receives sign(p - t) / N (0 at exact ties).
template <class Real>
double l1(const Tensor<Real>& pred, const Tensor<Real>& target,
          Tensor<Real>* gpred) {
  check_finite(pred, "l1 pred");
  if (!pred.same_shape(target)) throw DataError("l1: shape mismatch");
  size_t N = pred.size();
  if (N == 0) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < N; ++i) {
    double d = static_cast<double>(pred.data[i]) -
               static_cast<double>(target.data[i]);
    total += std::abs(d);
    if (gpred)
      gpred->data[i] +=
          static_cast<Real>((d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / N);
  }
  return total / static_cast<double>(N);
}

// MSE over a masked subset of rows of a single column; mean over the
// masked rows. Defined as 0 when the mask selects nothing.
template <class Real>
double mse_masked_column(const Tensor<Real>& pred, int column,
                         const std::vector<Real>& target,
                         const std::vector<bool>& mask, Tensor<Real>* gpred) {
  check_finite(pred, "mse_masked_column pred");
  int T = pred.rows();
  if (static_cast<int>(target.size()) != T ||
      static_cast<int>(mask.size()) != T)
    throw DataError("mse_masked_column: length mismatch");
  long count = 0;
  for (int t = 0; t < T; ++t)
    if (mask[t]) ++count;
  if (count == 0) return 0.0;
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    if (!mask[t]) continue;
    double d = static_cast<double>(pred.row(t)[column]) -
               static_cast<double>(target[t]);
    total += d * d;
    if (gpred) gpred->row(t)[column] += static_cast<Real>(2.0 * d / count);
  }
  return total / static_cast<double>(count);
}

}  // namespace ttsfront::nn
