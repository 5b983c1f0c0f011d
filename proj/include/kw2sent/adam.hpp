#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "kw2sent/errors.hpp"
#include "kw2sent/tensor.hpp"

namespace kw2sent {

/// Named parameter registry. std::map keeps iteration order stable so the
/// optimizer touches parameters in the same order every step.
template <class Real>
using ParamMap = std::map<std::string, Tensor<Real>>;

/// Bias-corrected Adam with one first/second moment array per parameter.
template <class Real>
struct AdamState {
  Real lr = Real(0.001);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
  long long step = 0;
  std::map<std::string, std::vector<Real>> m;
  std::map<std::string, std::vector<Real>> v;

  static AdamState init(const ParamMap<Real>& params, Real lr = Real(0.001)) {
    AdamState st;
    st.lr = lr;
    for (const auto& [name, p] : params) {
      st.m[name].assign(p.numel(), Real(0));
      st.v[name].assign(p.numel(), Real(0));
    }
    return st;
  }
};

/// One Adam update over every registered parameter. Gradients must be
/// populated for all of them; they are cleared afterwards.
template <class Real>
void adam_step(ParamMap<Real>& params, AdamState<Real>& state) {
  for (auto& [name, p] : params) {
    if (!p.has_grad())
      throw StateError("adam_step: missing gradient for parameter '" + name +
                       "'");
    auto it = state.m.find(name);
    if (it == state.m.end() || it->second.size() != p.numel())
      throw StateError("adam_step: state not initialized for parameter '" +
                       name + "'");
  }
  state.step += 1;
  const Real bc1 = Real(1) - std::pow(state.beta1, Real(state.step));
  const Real bc2 = Real(1) - std::pow(state.beta2, Real(state.step));
  for (auto& [name, p] : params) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    auto& val = p.value();
    auto& g = p.grad();
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = state.beta1 * m[i] + (Real(1) - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (Real(1) - state.beta2) * g[i] * g[i];
      Real mhat = m[i] / bc1;
      Real vhat = v[i] / bc2;
      val[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    p.clear_grad();
  }
}

/// Global L2 norm over all parameter gradients (absent grads count as zero).
template <class Real>
double grad_global_norm(const ParamMap<Real>& params) {
  double acc = 0;
  for (const auto& [name, p] : params) {
    (void)name;
    if (!p.has_grad()) continue;
    for (Real g : p.grad()) acc += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(acc);
}

/// Rescale gradients in place so their global norm is at most max_norm.
template <class Real>
void clip_gradients(ParamMap<Real>& params, double max_norm) {
  double norm = grad_global_norm(params);
  if (norm <= max_norm || norm == 0) return;
  Real s = static_cast<Real>(max_norm / norm);
  for (auto& [name, p] : params) {
    (void)name;
    if (!p.has_grad()) continue;
    for (Real& g : p.grad()) g *= s;
  }
}

}  // namespace kw2sent
