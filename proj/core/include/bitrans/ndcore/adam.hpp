#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bitrans::nd {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators for a fixed list of parameter blocks. The block
/// layout is captured on the first step and checked on every later one.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamOptions options) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  /// Learning rate for subsequent steps; moments are kept.
  void set_lr(double lr) { options_.lr = lr; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

  /// One bias-corrected Adam update. Throws RuntimeFailure on non-finite
  /// gradients before touching any parameter.
  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads);

 private:
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t step_ = 0;
};

inline void adam_step(AdamState& state, std::span<const std::span<double>> params,
                      std::span<const std::span<const double>> grads) {
  state.step(params, grads);
}

}  // namespace bitrans::nd
