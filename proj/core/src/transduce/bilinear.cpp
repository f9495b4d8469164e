#include "bitrans/transduce/bilinear.hpp"

#include <vector>

#include "bitrans/error.hpp"

namespace bitrans::transduce {

void BilinearPredictor::validate() const {
  BITRANS_EXPECT(outputs > 0 && segment > 0, "BilinearPredictor: K and m must be positive");
  BITRANS_EXPECT(f_net.output_dim() == outputs * segment && g_net.output_dim() == outputs * segment,
                 "BilinearPredictor: embedding size must be K * m");
  BITRANS_EXPECT(f_net.input_dim() == g_net.input_dim(),
                 "BilinearPredictor: difference and anchor inputs must share a dimension");
}

nd::Matrix segment_products(const nd::Matrix& f_emb, const nd::Matrix& g_emb, std::size_t outputs,
                            std::size_t segment) {
  BITRANS_EXPECT(f_emb.rows() == g_emb.rows() && f_emb.cols() == g_emb.cols(),
                 "segment_products: embedding shape mismatch");
  BITRANS_EXPECT(static_cast<std::size_t>(f_emb.rows()) == outputs * segment,
                 "segment_products: embedding size must be K * m");
  const auto m = static_cast<Eigen::Index>(segment);
  nd::Matrix out(static_cast<Eigen::Index>(outputs), f_emb.cols());
  for (Eigen::Index b = 0; b < f_emb.cols(); ++b)
    for (Eigen::Index k = 0; k < out.rows(); ++k)
      out(k, b) = f_emb.col(b).segment(k * m, m).dot(g_emb.col(b).segment(k * m, m));
  return out;
}

nd::Matrix BilinearPredictor::predict(const nd::Matrix& deltas, const nd::Matrix& anchors) const {
  BITRANS_EXPECT(deltas.cols() == anchors.cols(), "BilinearPredictor::predict: batch size mismatch");
  return segment_products(f_net.forward(deltas), g_net.forward(anchors), outputs, segment);
}

BilinearPredictor make_bilinear(std::size_t input_dim, std::size_t outputs, const ArchConfig& arch,
                                nd::Rng& rng) {
  BITRANS_EXPECT(outputs > 0 && arch.segment > 0, "make_bilinear: K and m must be positive");
  const std::vector<std::size_t> hidden(arch.hidden_layers, arch.units);
  BilinearPredictor p;
  p.outputs = outputs;
  p.segment = arch.segment;
  p.f_net = nd::DenseNet::mlp(input_dim, hidden, outputs * arch.segment, arch.fourier, rng, arch.fourier_scale);
  p.g_net = nd::DenseNet::mlp(input_dim, hidden, outputs * arch.segment, arch.fourier, rng, arch.fourier_scale);
  return p;
}

nd::Vector bilinear_forward(const BilinearPredictor& pred, const nd::Vector& delta,
                            const nd::Vector& anchor) {
  BITRANS_EXPECT(static_cast<std::size_t>(delta.size()) == pred.f_net.input_dim() &&
                     static_cast<std::size_t>(anchor.size()) == pred.g_net.input_dim(),
                 "bilinear_forward: input dimension mismatch");
  return pred.predict(nd::Matrix(delta), nd::Matrix(anchor)).col(0);
}

}  // namespace bitrans::transduce
