#pragma once

#include <cstddef>

#include "bitrans/ndcore/dense_net.hpp"
#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::transduce {

/// Shape of the embedding networks: `hidden_layers` relu layers of `units`
/// each, an identity output layer, and optional Fourier preprocessing.
struct ArchConfig {
  std::size_t hidden_layers = 2;
  std::size_t units = 128;
  std::size_t segment = 32;  // m: per-output embedding size
  bool fourier = true;
  double fourier_scale = 1.0;  // multiplies the Fourier weight init bound
};

/// y_k = < f(dx)[k m : (k+1) m], g(x')[k m : (k+1) m] >, k = 0..K-1.
struct BilinearPredictor {
  nd::DenseNet f_net;  // difference embedding, d -> K m
  nd::DenseNet g_net;  // anchor embedding, d -> K m
  std::size_t outputs = 1;  // K
  std::size_t segment = 1;  // m

  std::size_t input_dim() const { return g_net.input_dim(); }

  /// One prediction per column of (deltas, anchors); result is K x B.
  nd::Matrix predict(const nd::Matrix& deltas, const nd::Matrix& anchors) const;

  void validate() const;
};

BilinearPredictor make_bilinear(std::size_t input_dim, std::size_t outputs, const ArchConfig& arch,
                                nd::Rng& rng);

nd::Vector bilinear_forward(const BilinearPredictor& pred, const nd::Vector& delta, const nd::Vector& anchor);

/// Segment-wise dot products of two (K m) x B embedding matrices.
nd::Matrix segment_products(const nd::Matrix& f_emb, const nd::Matrix& g_emb, std::size_t outputs,
                            std::size_t segment);

}  // namespace bitrans::transduce
