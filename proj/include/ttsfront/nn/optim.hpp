#pragma once

// Adam with bias correction, and the inverse-time learning-rate decay
// used by every trainer: lr(t) = lr0 / (1 + decay * t).

#include <cmath>
#include <vector>

#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::nn {

struct LrSchedule {
  double lr0 = 2e-4;
  double decay = 1e-5;  // per optimizer step
};

inline double lr_at(const LrSchedule& s, long step) {
  return s.lr0 / (1.0 + s.decay * static_cast<double>(step));
}

template <class Real>
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit Adam(const std::vector<ParamRef<Real>>& params) {
    for (const auto& p : params) {
      m_.emplace_back(p.tensor->size(), 0.0);
      v_.emplace_back(p.tensor->size(), 0.0);
    }
  }

  long step_count() const { return step_; }

  // One update from the gradients currently accumulated in the params.
  void step(const std::vector<ParamRef<Real>>& params, double lr) {
    if (params.size() != m_.size())
      throw DataError("Adam: parameter list changed size");
    ++step_;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (size_t pi = 0; pi < params.size(); ++pi) {
      Tensor<Real>& t = *params[pi].tensor;
      if (t.size() != m_[pi].size())
        throw DataError("Adam: parameter shape changed");
      std::vector<double>& m = m_[pi];
      std::vector<double>& v = v_[pi];
      for (size_t i = 0; i < t.size(); ++i) {
        double g = static_cast<double>(t.grad[i]);
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        t.data[i] = static_cast<Real>(static_cast<double>(t.data[i]) -
                                      lr * mhat / (std::sqrt(vhat) + epsilon));
      }
    }
  }

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_ = 0;
};

}  // namespace ttsfront::nn
