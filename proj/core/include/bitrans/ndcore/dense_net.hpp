#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::nd {

enum class Activation { relu, identity };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

/// Trainable sinusoidal preprocessing: features = sin(pi * (W x + c)), with W
/// of shape (kExpansion * d_in) x d_in.
struct FourierLayer {
  static constexpr std::size_t kExpansion = 40;

  Matrix weight;
  Vector bias;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

/// Activations recorded by a forward pass and consumed by backward().
struct ForwardCache {
  std::uint64_t net_id = 0;
  std::uint64_t net_version = 0;
  Matrix input;                         // raw network input
  Matrix fourier_pre;                   // W x + c, before pi and sin
  std::vector<Matrix> layer_inputs;     // input seen by each dense layer
  std::vector<Matrix> pre_activations;  // W x + b for each dense layer
};

/// Gradients laid out exactly like the network parameters.
struct NetGrads {
  Matrix fourier_weight;  // empty when the net has no Fourier layer
  Vector fourier_bias;
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  void set_zero();
  /// Views in the same order as DenseNet::parameters().
  std::vector<std::span<double>> spans();
  std::vector<std::span<const double>> spans() const;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

struct BackwardResult {
  NetGrads param_grads;
  Matrix grad_input;
};

/// Feedforward network: optional Fourier layer followed by dense layers.
/// Hidden layers use relu, the final layer is identity.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<DenseLayer> layers, std::optional<FourierLayer> fourier = std::nullopt);

  DenseNet(const DenseNet& other);
  DenseNet& operator=(const DenseNet& other);
  DenseNet(DenseNet&&) noexcept = default;
  DenseNet& operator=(DenseNet&&) noexcept = default;

  /// `hidden` lists the width of each relu layer; the output layer is added
  /// on top. Weights and biases are uniform(-1/sqrt(fan_in), 1/sqrt(fan_in));
  /// the Fourier weight and bias bound is additionally multiplied by
  /// `fourier_scale`.
  static DenseNet mlp(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
                      bool fourier, Rng& rng, double fourier_scale = 1.0);

  std::size_t input_dim() const;
  std::size_t output_dim() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::optional<FourierLayer>& fourier() const { return fourier_; }

  /// Mutable parameter views (Fourier weight and bias first, then
  /// weight/bias per layer). Taking them invalidates outstanding forward caches.
  std::vector<std::span<double>> parameters();
  std::size_t parameter_count() const;

  NetGrads zero_grads() const;

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, ForwardCache& cache) const;

  /// Accumulates parameter gradients into `grads` and returns dL/dx.
  Matrix backward(const ForwardCache& cache, const Matrix& grad_y, NetGrads& grads) const;

  bool all_finite() const;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  std::optional<FourierLayer> fourier_;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

ForwardResult net_forward(const DenseNet& net, const Vector& x);
ForwardResult net_forward(const DenseNet& net, const Matrix& x);
BackwardResult net_backward(const DenseNet& net, const ForwardCache& cache, const Matrix& grad_y);

/// sin(pi * (W x + c)) for each column of x.
Matrix fourier_forward(const FourierLayer& layer, const Matrix& x);

}  // namespace bitrans::nd
