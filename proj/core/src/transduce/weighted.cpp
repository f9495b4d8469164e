#include "bitrans/transduce/weighted.hpp"

#include <algorithm>
#include <cmath>

#include "bitrans/error.hpp"

namespace bitrans::transduce {
namespace {

constexpr double kDegenerateWeight = 1e-6;
constexpr std::size_t kProbePairs = 1024;

struct PairPool {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (i, j): target i, anchor j
  std::vector<double> cumulative;
};

nd::Vector score_pairs(const PairWeighter& omega, const nd::Matrix& xs,
                       const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs, std::size_t begin,
                       std::size_t end) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  nd::Matrix deltas(xs.rows(), n), anchors(xs.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto [i, j] = pairs[begin + static_cast<std::size_t>(c)];
    deltas.col(c) = xs.col(i) - xs.col(j);
    anchors.col(c) = xs.col(j);
  }
  return omega.weights(deltas, anchors);
}

PairPool build_pool(const PairWeighter& omega, const nd::Matrix& xs, std::size_t cap, nd::Rng& rng) {
  const auto n = static_cast<std::size_t>(xs.cols());
  const std::size_t total = n * (n - 1);
  PairPool pool;
  if (total <= cap) {
    pool.pairs.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) pool.pairs.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  } else {
    pool.pairs.reserve(cap);
    for (std::size_t s = 0; s < cap; ++s) {
      const auto i = rng.index(n);
      auto j = rng.index(n - 1);
      if (j >= i) ++j;
      pool.pairs.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  pool.cumulative.resize(pool.pairs.size());
  double acc = 0.0;
  constexpr std::size_t kChunk = 4096;
  for (std::size_t begin = 0; begin < pool.pairs.size(); begin += kChunk) {
    const std::size_t end = std::min(pool.pairs.size(), begin + kChunk);
    const nd::Vector w = score_pairs(omega, xs, pool.pairs, begin, end);
    for (std::size_t k = begin; k < end; ++k) {
      const double wk = w(static_cast<Eigen::Index>(k - begin));
      if (!(wk >= 0.0) || !std::isfinite(wk)) throw RuntimeFailure("train_weighted: invalid pair weight");
      acc += wk;
      pool.cumulative[k] = acc;
    }
  }
  if (!(acc > kDegenerateWeight * static_cast<double>(pool.pairs.size())))
    throw RuntimeFailure("train_weighted: weighting function is ~0 on every pair (degenerate weighting)");
  return pool;
}

void check_not_degenerate(const PairWeighter& omega, const nd::Matrix& xs, nd::Rng& probe_rng) {
  const nd::Matrix dummy_ys = nd::Matrix::Zero(1, xs.cols());
  PairBatch pb = sample_pairs(xs, dummy_ys, kProbePairs, probe_rng);
  const nd::Vector w = omega.weights(pb.deltas, pb.anchors);
  if (!(w.mean() > kDegenerateWeight))
    throw RuntimeFailure("train_weighted: weighting function is ~0 on every probed pair (degenerate weighting)");
}

PairBatch draw_from_pool(const PairPool& pool, const nd::Matrix& xs, const nd::Matrix& ys, std::size_t batch,
                         nd::Rng& rng) {
  const auto B = static_cast<Eigen::Index>(batch);
  PairBatch pb{nd::Matrix(xs.rows(), B), nd::Matrix(xs.rows(), B), nd::Matrix(ys.rows(), B)};
  const double total = pool.cumulative.back();
  for (Eigen::Index b = 0; b < B; ++b) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(pool.cumulative.begin(), pool.cumulative.end(), u);
    if (it == pool.cumulative.end()) --it;
    const auto [i, j] = pool.pairs[static_cast<std::size_t>(it - pool.cumulative.begin())];
    pb.deltas.col(b) = xs.col(i) - xs.col(j);
    pb.anchors.col(b) = xs.col(j);
    pb.targets.col(b) = ys.col(i);
  }
  return pb;
}

}  // namespace

WeightingFunction::WeightingFunction(BilinearPredictor net) : net_(std::move(net)) {
  net_.validate();
  BITRANS_EXPECT(net_.outputs == 1, "WeightingFunction: omega must be scalar (K = 1)");
}

nd::Vector WeightingFunction::weights(const nd::Matrix& deltas, const nd::Matrix& anchors) const {
  const nd::Matrix raw = net_.predict(deltas, anchors);
  return (1.0 / (1.0 + (-raw.row(0).transpose().array()).exp())).matrix();
}

double WeightingFunction::operator()(const nd::Vector& delta, const nd::Vector& anchor) const {
  return weights(nd::Matrix(delta), nd::Matrix(anchor))(0);
}

WeightingFunction train_weighting(const std::vector<LabeledPair>& pairs, const TrainConfig& config,
                                  TrainStats* stats) {
  config.validate();
  if (pairs.empty()) throw ValidationError("weighting.pairs", "no labeled pairs");
  const auto dim = pairs.front().anchor.size();
  std::size_t positives = 0;
  for (const auto& p : pairs) {
    BITRANS_EXPECT(p.anchor.size() == dim && p.query.size() == dim, "train_weighting: pair dimension mismatch");
    if (p.label != 0.0 && p.label != 1.0) throw ValidationError("weighting.label", "labels must be 0 or 1");
    positives += p.label == 1.0 ? 1 : 0;
  }
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  if (positives == 0 || positives == pairs.size())
    st.warnings.push_back("train_weighting: all labels belong to one class");

  nd::Rng rng(config.seed);
  BilinearTrainer trainer(make_bilinear(static_cast<std::size_t>(dim), 1, config.arch, rng), config.adam, config.l2,
                          OutputLink::logistic);
  const auto B = static_cast<Eigen::Index>(config.batch);
  nd::Matrix deltas(dim, B), anchors(dim, B), targets(1, B);
  st.step_losses.reserve(config.steps);
  for (std::size_t s = 0; s < config.steps; ++s) {
    trainer.set_lr(config.lr_at(s));
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& p = pairs[rng.index(pairs.size())];
      deltas.col(b) = p.query - p.anchor;
      anchors.col(b) = p.anchor;
      targets(0, b) = p.label;
    }
    st.step_losses.push_back(trainer.step(deltas, anchors, targets));
  }
  st.finish();
  return WeightingFunction(trainer.release());
}

BilinearPredictor train_weighted(const nd::Matrix& xs, const nd::Matrix& ys, const PairWeighter& omega,
                                 const WeightedConfig& config, TrainStats* stats) {
  const TrainConfig& tc = config.train;
  tc.validate();
  if (xs.cols() < 2) throw ValidationError("data.n_train", "weighted transduction needs >= 2 samples");
  BITRANS_EXPECT(xs.cols() == ys.cols(), "train_weighted: xs/ys sample count mismatch");

  nd::Rng rng(tc.seed);
  BilinearTrainer trainer(
      make_bilinear(static_cast<std::size_t>(xs.rows()), static_cast<std::size_t>(ys.rows()), tc.arch, rng),
      tc.adam, tc.l2);
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st.step_losses.reserve(tc.steps);

  // The degeneracy probe uses its own stream so that omega == 1 reproduces
  // train_bilinear step for step.
  nd::Rng probe_rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  if (config.sampling == WeightedSampling::proportional) {
    const PairPool pool = build_pool(omega, xs, config.pool_cap, probe_rng);
    for (std::size_t s = 0; s < tc.steps; ++s) {
      trainer.set_lr(tc.lr_at(s));
      PairBatch pb = draw_from_pool(pool, xs, ys, tc.batch, rng);
      st.step_losses.push_back(trainer.step(pb.deltas, pb.anchors, pb.targets));
    }
  } else {
    check_not_degenerate(omega, xs, probe_rng);
    for (std::size_t s = 0; s < tc.steps; ++s) {
      trainer.set_lr(tc.lr_at(s));
      PairBatch pb = sample_pairs(xs, ys, tc.batch, rng);
      const nd::Vector w = omega.weights(pb.deltas, pb.anchors);
      st.step_losses.push_back(trainer.step(pb.deltas, pb.anchors, pb.targets, &w));
    }
  }
  st.finish();
  return trainer.release();
}

BilinearPredictor train_weighted_joint(const nd::Matrix& xs, const nd::Matrix& ys, WeightingFunction& omega,
                                       const std::vector<LabeledPair>& labels, const WeightedConfig& config,
                                       TrainStats* stats) {
  const TrainConfig& tc = config.train;
  tc.validate();
  if (xs.cols() < 2) throw ValidationError("data.n_train", "weighted transduction needs >= 2 samples");
  if (labels.empty()) throw ValidationError("weighting.pairs", "joint training needs labeled pairs");

  nd::Rng rng(tc.seed);
  BilinearTrainer trainer(
      make_bilinear(static_cast<std::size_t>(xs.rows()), static_cast<std::size_t>(ys.rows()), tc.arch, rng),
      tc.adam, tc.l2);
  BilinearTrainer omega_trainer(omega.net(), tc.adam, 0.0, OutputLink::logistic);
  TrainStats local;
  TrainStats& st = stats ? *stats : local;

  const auto dim = xs.rows();
  const auto B = static_cast<Eigen::Index>(tc.batch);
  nd::Matrix l_deltas(dim, B), l_anchors(dim, B), l_targets(1, B);
  for (std::size_t s = 0; s < tc.steps; ++s) {
    trainer.set_lr(tc.lr_at(s));
    omega_trainer.set_lr(tc.lr_at(s));
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& p = labels[rng.index(labels.size())];
      l_deltas.col(b) = p.query - p.anchor;
      l_anchors.col(b) = p.anchor;
      l_targets(0, b) = p.label;
    }
    omega_trainer.step(l_deltas, l_anchors, l_targets);
    const WeightingFunction current(omega_trainer.predictor());
    PairBatch pb = sample_pairs(xs, ys, tc.batch, rng);
    const nd::Vector w = current.weights(pb.deltas, pb.anchors);
    st.step_losses.push_back(trainer.step(pb.deltas, pb.anchors, pb.targets, &w));
  }
  omega = WeightingFunction(omega_trainer.release());
  st.finish();
  return trainer.release();
}

std::size_t select_weighted_anchor(const PairWeighter& omega, const nd::Vector& x_test, const nd::Matrix& train_xs,
                                   WeightedAnchor mode, nd::Rng* rng) {
  BITRANS_EXPECT(train_xs.cols() > 0, "select_weighted_anchor: no training points");
  BITRANS_EXPECT(x_test.size() == train_xs.rows(), "select_weighted_anchor: dimension mismatch");
  const nd::Matrix deltas = (-train_xs).colwise() + x_test;
  const nd::Vector w = omega.weights(deltas, train_xs);
  if (mode == WeightedAnchor::argmax) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < w.size(); ++i)
      if (w(i) > w(best)) best = i;
    return static_cast<std::size_t>(best);
  }
  BITRANS_EXPECT(rng != nullptr, "select_weighted_anchor: sampling mode needs an rng");
  const double total = w.sum();
  if (!(total > 0.0)) throw RuntimeFailure("select_weighted_anchor: all weights are zero");
  double u = rng->uniform() * total;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (u < w(i)) return static_cast<std::size_t>(i);
    u -= w(i);
  }
  return static_cast<std::size_t>(w.size() - 1);
}

nd::Matrix predict_weighted_batch(const BilinearPredictor& pred, const PairWeighter& omega, const nd::Matrix& x_test,
                                  const nd::Matrix& train_xs, WeightedAnchor mode, nd::Rng* rng) {
  nd::Matrix deltas(x_test.rows(), x_test.cols()), anchors(x_test.rows(), x_test.cols());
  for (Eigen::Index c = 0; c < x_test.cols(); ++c) {
    const auto i = static_cast<Eigen::Index>(select_weighted_anchor(omega, x_test.col(c), train_xs, mode, rng));
    anchors.col(c) = train_xs.col(i);
    deltas.col(c) = x_test.col(c) - train_xs.col(i);
  }
  return pred.predict(deltas, anchors);
}

nd::Vector predict_weighted(const BilinearPredictor& pred, const PairWeighter& omega, const nd::Vector& x_test,
                            const nd::Matrix& train_xs, WeightedAnchor mode, nd::Rng* rng) {
  return predict_weighted_batch(pred, omega, nd::Matrix(x_test), train_xs, mode, rng).col(0);
}

}  // namespace bitrans::transduce
