#pragma once

// Central finite-difference gradient verification. Instantiate the
// model under test with Real = double: the f32 activation noise floor
// sits orders of magnitude above the 1e-4 relative tolerance.

#include <functional>
#include <string>
#include <vector>

#include "ttsfront/nn/tensor.hpp"

namespace ttsfront::nn {

struct GradCheckReport {
  bool ok = true;
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;

  std::string describe() const {
    return (ok ? "ok" : "FAILED") + std::string(", max rel err ") +
           std::to_string(max_rel_err) + " at " + worst_param + "[" +
           std::to_string(worst_index) + "] (analytic " +
           std::to_string(analytic) + ", numeric " + std::to_string(numeric) +
           ")";
  }
};

// loss_fn: pure forward pass returning the scalar loss.
// grad_fn: zeroes grads, runs forward+backward, leaves analytic
// gradients in param.grad.
template <class Real>
GradCheckReport gradient_check(const std::vector<ParamRef<Real>>& params,
                               const std::function<double()>& loss_fn,
                               const std::function<void()>& grad_fn,
                               double step = 1e-4, double tolerance = 1e-4) {
  grad_fn();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    std::vector<double> g(p.tensor->size());
    for (size_t i = 0; i < g.size(); ++i)
      g[i] = static_cast<double>(p.tensor->grad[i]);
    analytic.push_back(std::move(g));
  }

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<Real>& t = *params[pi].tensor;
    for (size_t i = 0; i < t.size(); ++i) {
      Real saved = t.data[i];
      t.data[i] = static_cast<Real>(static_cast<double>(saved) + step);
      double lp = loss_fn();
      t.data[i] = static_cast<Real>(static_cast<double>(saved) - step);
      double lm = loss_fn();
      t.data[i] = saved;
      double numeric = (lp - lm) / (2.0 * step);
      double a = analytic[pi][i];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  report.ok = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace ttsfront::nn
