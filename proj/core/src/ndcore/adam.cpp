#include "bitrans/ndcore/adam.hpp"

#include <cmath>

#include "bitrans/error.hpp"

namespace bitrans::nd {

void AdamState::step(std::span<const std::span<double>> params,
                     std::span<const std::span<const double>> grads) {
  BITRANS_EXPECT(params.size() == grads.size(), "adam_step: parameter/gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    BITRANS_EXPECT(params[b].size() == grads[b].size(), "adam_step: block size mismatch");
    for (double g : grads[b])
      if (!std::isfinite(g)) throw RuntimeFailure("adam_step: non-finite gradient");
  }
  if (m_.empty() && step_ == 0) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t b = 0; b < params.size(); ++b) {
      m_[b].assign(params[b].size(), 0.0);
      v_[b].assign(params[b].size(), 0.0);
    }
  }
  BITRANS_EXPECT(m_.size() == params.size(), "adam_step: parameter layout changed between steps");
  for (std::size_t b = 0; b < params.size(); ++b)
    BITRANS_EXPECT(m_[b].size() == params[b].size(), "adam_step: parameter layout changed between steps");

  ++step_;
  const auto& o = options_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    const auto& g = grads[b];
    auto& p = params[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace bitrans::nd
