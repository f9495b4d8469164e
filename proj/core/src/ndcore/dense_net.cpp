#include "bitrans/ndcore/dense_net.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "bitrans/error.hpp"

namespace bitrans::nd {
namespace {

std::uint64_t next_net_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  // Row-major fill order keeps the draw sequence independent of storage order.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

void apply_activation(Activation act, Matrix& z) {
  if (act == Activation::relu) z = z.cwiseMax(0.0);
}

}  // namespace

void NetGrads::set_zero() {
  fourier_weight.setZero();
  fourier_bias.setZero();
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

std::vector<std::span<double>> NetGrads::spans() {
  std::vector<std::span<double>> out;
  if (fourier_weight.size() > 0) {
    out.emplace_back(fourier_weight.data(), static_cast<std::size_t>(fourier_weight.size()));
    out.emplace_back(fourier_bias.data(), static_cast<std::size_t>(fourier_bias.size()));
  }
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.emplace_back(weight[i].data(), static_cast<std::size_t>(weight[i].size()));
    out.emplace_back(bias[i].data(), static_cast<std::size_t>(bias[i].size()));
  }
  return out;
}

std::vector<std::span<const double>> NetGrads::spans() const {
  std::vector<std::span<const double>> out;
  if (fourier_weight.size() > 0) {
    out.emplace_back(fourier_weight.data(), static_cast<std::size_t>(fourier_weight.size()));
    out.emplace_back(fourier_bias.data(), static_cast<std::size_t>(fourier_bias.size()));
  }
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.emplace_back(weight[i].data(), static_cast<std::size_t>(weight[i].size()));
    out.emplace_back(bias[i].data(), static_cast<std::size_t>(bias[i].size()));
  }
  return out;
}

DenseNet::DenseNet(std::vector<DenseLayer> layers, std::optional<FourierLayer> fourier)
    : layers_(std::move(layers)), fourier_(std::move(fourier)), id_(next_net_id()) {
  validate();
}

DenseNet::DenseNet(const DenseNet& other)
    : layers_(other.layers_), fourier_(other.fourier_), id_(next_net_id()) {}

DenseNet& DenseNet::operator=(const DenseNet& other) {
  if (this != &other) {
    layers_ = other.layers_;
    fourier_ = other.fourier_;
    id_ = next_net_id();
    version_ = 0;
  }
  return *this;
}

void DenseNet::validate() const {
  BITRANS_EXPECT(!layers_.empty(), "DenseNet: at least one dense layer required");
  std::size_t expected = layers_.front().in_dim();
  if (fourier_) {
    BITRANS_EXPECT(static_cast<std::size_t>(fourier_->bias.size()) == fourier_->out_dim(),
                   "DenseNet: Fourier bias size mismatch");
      BITRANS_EXPECT(fourier_->out_dim() == FourierLayer::kExpansion * fourier_->in_dim(),
                   "DenseNet: Fourier layer must expand its input 40x");
    BITRANS_EXPECT(fourier_->out_dim() == expected,
                   "DenseNet: Fourier output does not match first dense layer");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    BITRANS_EXPECT(layer.in_dim() == expected, "DenseNet: layer dimensions do not chain");
    BITRANS_EXPECT(static_cast<std::size_t>(layer.bias.size()) == layer.out_dim(),
                   "DenseNet: bias size mismatch");
    const bool last = i + 1 == layers_.size();
    BITRANS_EXPECT(last ? layer.activation == Activation::identity
                        : layer.activation == Activation::relu,
                   "DenseNet: hidden layers must be relu and the output layer identity");
    expected = layer.out_dim();
  }
}

DenseNet DenseNet::mlp(std::size_t in_dim, std::span<const std::size_t> hidden,
                       std::size_t out_dim, bool fourier, Rng& rng, double fourier_scale) {
  BITRANS_EXPECT(in_dim > 0 && out_dim > 0, "DenseNet::mlp: dimensions must be positive");
  std::optional<FourierLayer> front;
  std::size_t width = in_dim;
  if (fourier) {
    const double bound = fourier_scale / std::sqrt(static_cast<double>(in_dim));
    const auto rows = static_cast<Eigen::Index>(FourierLayer::kExpansion * in_dim);
    FourierLayer layer;
    layer.weight = uniform_matrix(rows, static_cast<Eigen::Index>(in_dim), bound, rng);
    layer.bias = uniform_matrix(rows, 1, bound, rng);
    front = std::move(layer);
    width = FourierLayer::kExpansion * in_dim;
  }
  std::vector<DenseLayer> layers;
  auto add = [&](std::size_t out, Activation act) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    DenseLayer layer;
    layer.weight = uniform_matrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(width),
                                  bound, rng);
    layer.bias = uniform_matrix(static_cast<Eigen::Index>(out), 1, bound, rng);
    layer.activation = act;
    layers.push_back(std::move(layer));
    width = out;
  };
  for (std::size_t h : hidden) add(h, Activation::relu);
  add(out_dim, Activation::identity);
  return DenseNet(std::move(layers), std::move(front));
}

std::size_t DenseNet::input_dim() const {
  if (fourier_) return fourier_->in_dim();
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t DenseNet::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::vector<std::span<double>> DenseNet::parameters() {
  ++version_;
  std::vector<std::span<double>> out;
  if (fourier_) {
    out.emplace_back(fourier_->weight.data(), static_cast<std::size_t>(fourier_->weight.size()));
    out.emplace_back(fourier_->bias.data(), static_cast<std::size_t>(fourier_->bias.size()));
  }
  for (auto& layer : layers_) {
    out.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  return out;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = fourier_ ? static_cast<std::size_t>(fourier_->weight.size() + fourier_->bias.size()) : 0;
  for (const auto& layer : layers_)
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

NetGrads DenseNet::zero_grads() const {
  NetGrads g;
  if (fourier_) {
    g.fourier_weight = Matrix::Zero(fourier_->weight.rows(), fourier_->weight.cols());
    g.fourier_bias = Vector::Zero(fourier_->bias.size());
  }
  for (const auto& layer : layers_) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

Matrix fourier_forward(const FourierLayer& layer, const Matrix& x) {
  BITRANS_EXPECT(static_cast<std::size_t>(x.rows()) == layer.in_dim(),
                 "fourier_forward: input dimension mismatch");
  Matrix z = layer.weight * x;
  z.colwise() += layer.bias;
  return (std::numbers::pi * z).array().sin().matrix();
}

Matrix DenseNet::forward(const Matrix& x) const {
  BITRANS_EXPECT(static_cast<std::size_t>(x.rows()) == input_dim(),
                 "DenseNet::forward: input dimension mismatch");
  Matrix h = fourier_ ? fourier_forward(*fourier_, x) : x;
  for (const auto& layer : layers_) {
    Matrix z = layer.weight * h;
    z.colwise() += layer.bias;
    apply_activation(layer.activation, z);
    h = std::move(z);
  }
  return h;
}

Matrix DenseNet::forward(const Matrix& x, ForwardCache& cache) const {
  BITRANS_EXPECT(static_cast<std::size_t>(x.rows()) == input_dim(),
                 "DenseNet::forward: input dimension mismatch");
  cache.net_id = id_;
  cache.net_version = version_;
  cache.input = x;
  cache.layer_inputs.resize(layers_.size());
  cache.pre_activations.resize(layers_.size());
  Matrix h;
  if (fourier_) {
    cache.fourier_pre = fourier_->weight * x;
    cache.fourier_pre.colwise() += fourier_->bias;
    h = (std::numbers::pi * cache.fourier_pre).array().sin().matrix();
  } else {
    cache.fourier_pre.resize(0, 0);
    h = x;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    Matrix z = layer.weight * h;
    z.colwise() += layer.bias;
    cache.layer_inputs[i] = std::move(h);
    cache.pre_activations[i] = z;
    apply_activation(layer.activation, z);
    h = std::move(z);
  }
  return h;
}

Matrix DenseNet::backward(const ForwardCache& cache, const Matrix& grad_y, NetGrads& grads) const {
  BITRANS_EXPECT(cache.net_id == id_ && cache.net_version == version_,
                 "DenseNet::backward: cache does not come from the current parameters");
  BITRANS_EXPECT(cache.layer_inputs.size() == layers_.size(), "DenseNet::backward: malformed cache");
  BITRANS_EXPECT(grads.weight.size() == layers_.size(), "DenseNet::backward: gradient shape mismatch");
  BITRANS_EXPECT(static_cast<std::size_t>(grad_y.rows()) == output_dim() &&
                     grad_y.cols() == cache.input.cols(),
                 "DenseNet::backward: upstream gradient shape mismatch");

  Matrix delta = grad_y;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& layer = layers_[k];
    if (layer.activation == Activation::relu)
      delta = delta.cwiseProduct((cache.pre_activations[k].array() > 0.0).cast<double>().matrix());
    grads.weight[k].noalias() += delta * cache.layer_inputs[k].transpose();
    grads.bias[k] += delta.rowwise().sum();
    delta = layer.weight.transpose() * delta;
  }
  if (fourier_) {
    const auto scale = (std::numbers::pi * (std::numbers::pi * cache.fourier_pre).array().cos());
    Matrix dz = (delta.array() * scale).matrix();
    grads.fourier_weight.noalias() += dz * cache.input.transpose();
    grads.fourier_bias += dz.rowwise().sum();
    delta = fourier_->weight.transpose() * dz;
  }
  return delta;
}

bool DenseNet::all_finite() const {
  if (fourier_ && !(fourier_->weight.allFinite() && fourier_->bias.allFinite())) return false;
  for (const auto& layer : layers_)
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

ForwardResult net_forward(const DenseNet& net, const Matrix& x) {
  ForwardResult r;
  r.output = net.forward(x, r.cache);
  return r;
}

ForwardResult net_forward(const DenseNet& net, const Vector& x) {
  return net_forward(net, Matrix(x));
}

BackwardResult net_backward(const DenseNet& net, const ForwardCache& cache, const Matrix& grad_y) {
  BackwardResult r;
  r.param_grads = net.zero_grads();
  r.grad_input = net.backward(cache, grad_y, r.param_grads);
  return r;
}

}  // namespace bitrans::nd
