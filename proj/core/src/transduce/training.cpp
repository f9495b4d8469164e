#include "bitrans/transduce/training.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "bitrans/error.hpp"

namespace bitrans::transduce {
namespace {

std::vector<std::span<const double>> to_const_spans(const std::vector<std::span<double>>& spans) {
  return {spans.begin(), spans.end()};
}

}  // namespace

void TrainConfig::validate() const {
  if (batch == 0) throw ValidationError("optim.batch", "must be positive");
  if (steps == 0) throw ValidationError("optim.steps", "must be positive");
  if (!(adam.lr > 0.0)) throw ValidationError("optim.lr", "must be positive");
  if (arch.units == 0) throw ValidationError("model.units", "must be positive");
  if (arch.segment == 0) throw ValidationError("model.segment", "must be positive");
  if (!(l2 >= 0.0)) throw ValidationError("optim.l2", "must be nonnegative");
  if (!(lr_final_frac >= 0.0 && lr_final_frac <= 1.0))
    throw ValidationError("optim.lr_final_frac", "must lie in [0, 1]");
}

double TrainConfig::lr_at(std::size_t s) const {
  if (schedule == LrSchedule::constant) return adam.lr;
  const double t = static_cast<double>(s) / static_cast<double>(steps);
  return adam.lr * (lr_final_frac + (1.0 - lr_final_frac) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

void TrainStats::finish() {
  const std::size_t n = std::min<std::size_t>(100, step_losses.size());
  if (n == 0) return;
  final_loss = std::accumulate(step_losses.end() - static_cast<std::ptrdiff_t>(n), step_losses.end(), 0.0) /
               static_cast<double>(n);
}

BilinearTrainer::BilinearTrainer(BilinearPredictor init, nd::AdamOptions adam, double l2, OutputLink link)
    : pred_(std::move(init)), adam_(adam), l2_(l2), link_(link) {
  pred_.validate();
}

double BilinearTrainer::step(const nd::Matrix& deltas, const nd::Matrix& anchors,
                             const nd::Matrix& targets, const nd::Vector* weights) {
  const auto K = static_cast<Eigen::Index>(pred_.outputs);
  const auto m = static_cast<Eigen::Index>(pred_.segment);
  const Eigen::Index B = deltas.cols();
  BITRANS_EXPECT(anchors.cols() == B && targets.cols() == B && targets.rows() == K,
                 "BilinearTrainer::step: batch shape mismatch");
  BITRANS_EXPECT(weights == nullptr || weights->size() == B, "BilinearTrainer::step: weight count mismatch");

  nd::ForwardCache f_cache, g_cache;
  const nd::Matrix F = pred_.f_net.forward(deltas, f_cache);
  const nd::Matrix G = pred_.g_net.forward(anchors, g_cache);
  nd::Matrix out = segment_products(F, G, pred_.outputs, pred_.segment);
  if (link_ == OutputLink::logistic) out = (1.0 / (1.0 + (-out.array()).exp())).matrix();

  const double denom = static_cast<double>(K * B);
  double loss = 0.0;
  nd::Matrix d_out(K, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const double w = weights ? (*weights)(b) : 1.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double diff = out(k, b) - targets(k, b);
      loss += w * diff * diff;
      d_out(k, b) = 2.0 * w * diff / denom;
    }
  }
  loss /= denom;
  if (link_ == OutputLink::logistic) d_out = d_out.cwiseProduct((out.array() * (1.0 - out.array())).matrix());

  nd::Matrix dF(F.rows(), B), dG(G.rows(), B);
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index k = 0; k < K; ++k) {
      dF.col(b).segment(k * m, m) = d_out(k, b) * G.col(b).segment(k * m, m);
      dG.col(b).segment(k * m, m) = d_out(k, b) * F.col(b).segment(k * m, m);
    }

  nd::NetGrads f_grads = pred_.f_net.zero_grads();
  nd::NetGrads g_grads = pred_.g_net.zero_grads();
  pred_.f_net.backward(f_cache, dF, f_grads);
  pred_.g_net.backward(g_cache, dG, g_grads);

  std::vector<std::span<double>> params = pred_.f_net.parameters();
  for (auto s : pred_.g_net.parameters()) params.push_back(s);
  std::vector<std::span<double>> grads = f_grads.spans();
  for (auto s : g_grads.spans()) grads.push_back(s);

  if (l2_ > 0.0) {
    for (std::size_t blk = 0; blk < params.size(); ++blk)
      for (std::size_t i = 0; i < params[blk].size(); ++i) {
        loss += l2_ * params[blk][i] * params[blk][i];
        grads[blk][i] += 2.0 * l2_ * params[blk][i];
      }
  }
  if (!std::isfinite(loss))
    throw RuntimeFailure("bilinear training: non-finite loss at Adam step " +
                         std::to_string(adam_.step_count() + 1));
  adam_.step(params, to_const_spans(grads));
  return loss;
}

PairBatch sample_pairs(const nd::Matrix& xs, const nd::Matrix& ys, std::size_t batch, nd::Rng& rng) {
  const auto n = static_cast<std::size_t>(xs.cols());
  BITRANS_EXPECT(n >= 2, "sample_pairs: need at least two samples");
  const auto B = static_cast<Eigen::Index>(batch);
  PairBatch pb{nd::Matrix(xs.rows(), B), nd::Matrix(xs.rows(), B), nd::Matrix(ys.rows(), B)};
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto i = static_cast<Eigen::Index>(rng.index(n));
    auto j = static_cast<Eigen::Index>(rng.index(n - 1));
    if (j >= i) ++j;
    pb.deltas.col(b) = xs.col(i) - xs.col(j);
    pb.anchors.col(b) = xs.col(j);
    pb.targets.col(b) = ys.col(i);
  }
  return pb;
}

BilinearPredictor train_bilinear(const nd::Matrix& xs, const nd::Matrix& ys, const TrainConfig& config,
                                 TrainStats* stats) {
  config.validate();
  if (xs.cols() < 2) throw ValidationError("data.n_train", "bilinear transduction needs >= 2 samples");
  BITRANS_EXPECT(xs.cols() == ys.cols(), "train_bilinear: xs/ys sample count mismatch");
  nd::Rng rng(config.seed);
  BilinearTrainer trainer(
      make_bilinear(static_cast<std::size_t>(xs.rows()), static_cast<std::size_t>(ys.rows()), config.arch, rng),
      config.adam, config.l2);
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st.step_losses.reserve(config.steps);
  for (std::size_t s = 0; s < config.steps; ++s) {
    trainer.set_lr(config.lr_at(s));
    PairBatch pb = sample_pairs(xs, ys, config.batch, rng);
    st.step_losses.push_back(trainer.step(pb.deltas, pb.anchors, pb.targets));
  }
  st.finish();
  return trainer.release();
}

std::vector<std::size_t> draw_anchors(const nd::Matrix& x_test, const nd::Matrix& train_xs,
                                      const DeltaBank& bank, const RhoPolicy& policy, nd::Rng& rng) {
  std::vector<std::size_t> chosen(static_cast<std::size_t>(x_test.cols()));
  for (Eigen::Index c = 0; c < x_test.cols(); ++c) {
    const AnchorSet set = select_anchors(x_test.col(c), train_xs, bank, policy);
    chosen[static_cast<std::size_t>(c)] = set.indices[rng.index(set.indices.size())];
  }
  return chosen;
}

nd::Matrix predict_transductive_batch(const BilinearPredictor& pred, const nd::Matrix& x_test,
                                      const nd::Matrix& train_xs, const DeltaBank& bank,
                                      const RhoPolicy& policy, nd::Rng& rng, AnchorDraw draw) {
  BITRANS_EXPECT(static_cast<std::size_t>(x_test.rows()) == pred.input_dim(),
                 "predict_transductive: query dimension mismatch");
  if (draw == AnchorDraw::uniform) {
    const auto idx = draw_anchors(x_test, train_xs, bank, policy, rng);
    nd::Matrix deltas(x_test.rows(), x_test.cols()), anchors(x_test.rows(), x_test.cols());
    for (Eigen::Index c = 0; c < x_test.cols(); ++c) {
      const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(c)]);
      anchors.col(c) = train_xs.col(i);
      deltas.col(c) = x_test.col(c) - train_xs.col(i);
    }
    return pred.predict(deltas, anchors);
  }
  nd::Matrix out(static_cast<Eigen::Index>(pred.outputs), x_test.cols());
  for (Eigen::Index c = 0; c < x_test.cols(); ++c) {
    const AnchorSet set = select_anchors(x_test.col(c), train_xs, bank, policy);
    const auto n = static_cast<Eigen::Index>(set.indices.size());
    nd::Matrix deltas(x_test.rows(), n), anchors(x_test.rows(), n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto i = static_cast<Eigen::Index>(set.indices[static_cast<std::size_t>(a)]);
      anchors.col(a) = train_xs.col(i);
      deltas.col(a) = x_test.col(c) - train_xs.col(i);
    }
    out.col(c) = pred.predict(deltas, anchors).rowwise().mean();
  }
  return out;
}

nd::Vector predict_transductive(const BilinearPredictor& pred, const nd::Vector& x_test,
                                const nd::Matrix& train_xs, const DeltaBank& bank,
                                const RhoPolicy& policy, nd::Rng& rng, AnchorDraw draw) {
  return predict_transductive_batch(pred, nd::Matrix(x_test), train_xs, bank, policy, rng, draw).col(0);
}

}  // namespace bitrans::transduce
