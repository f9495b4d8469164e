#include "bitrans/transduce/baselines.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/adam.hpp"
#include "bitrans/ndcore/loss.hpp"

namespace bitrans::transduce {
namespace {

std::vector<std::size_t> hidden_widths(const ArchConfig& arch) {
  return std::vector<std::size_t>(arch.hidden_layers, arch.units);
}

void append(std::vector<std::span<double>>& dst, std::vector<std::span<double>> src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

void append(std::vector<std::span<const double>>& dst, const nd::NetGrads& g) {
  const auto src = g.spans();
  dst.insert(dst.end(), src.begin(), src.end());
}

nd::Matrix concat_rows(const nd::Matrix& top, const nd::Matrix& bottom) {
  nd::Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

nd::Matrix obs_rows(const nd::Matrix& x, const GoalSlice& goal) {
  const auto b = static_cast<Eigen::Index>(goal.begin);
  const auto s = static_cast<Eigen::Index>(goal.size);
  return concat_rows(x.topRows(b), x.bottomRows(x.rows() - b - s));
}

nd::Matrix goal_rows(const nd::Matrix& x, const GoalSlice& goal) {
  return x.middleRows(static_cast<Eigen::Index>(goal.begin), static_cast<Eigen::Index>(goal.size));
}

nd::Matrix deepsets_forward(const BaselineModel& m, const nd::Matrix& x) {
  return m.head.forward(m.obs_branch.forward(obs_rows(x, m.goal)) + m.goal_branch.forward(goal_rows(x, m.goal)));
}

double check_loss(double loss, std::size_t step) {
  if (!std::isfinite(loss)) throw RuntimeFailure("baseline training: non-finite loss at step " + std::to_string(step));
  return loss;
}

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::linear: return "linear";
    case BaselineKind::mlp: return "mlp";
    case BaselineKind::concat_transduction: return "concat_transduction";
    case BaselineKind::deepsets: return "deepsets";
  }
  return "?";
}

BaselineKind baseline_from_string(std::string_view name) {
  for (auto k : {BaselineKind::linear, BaselineKind::mlp, BaselineKind::concat_transduction, BaselineKind::deepsets})
    if (to_string(k) == name) return k;
  throw ValidationError("method", "unknown baseline '" + std::string(name) + "'");
}

std::size_t BaselineModel::input_dim() const {
  switch (kind) {
    case BaselineKind::deepsets: return obs_branch.input_dim() + goal_branch.input_dim();
    case BaselineKind::concat_transduction: return net.input_dim() / 2;
    default: return net.input_dim();
  }
}

nd::Matrix BaselineModel::predict(const nd::Matrix& x) const {
  BITRANS_EXPECT(kind != BaselineKind::concat_transduction, "concat_transduction needs anchors; use predict_pairs");
  BITRANS_EXPECT(static_cast<std::size_t>(x.rows()) == input_dim(), "baseline predict: input dimension mismatch");
  if (kind == BaselineKind::deepsets) return deepsets_forward(*this, x);
  return net.forward(x);
}

nd::Matrix BaselineModel::predict_pairs(const nd::Matrix& deltas, const nd::Matrix& anchors) const {
  BITRANS_EXPECT(kind == BaselineKind::concat_transduction, "predict_pairs: only for concat_transduction");
  return net.forward(concat_rows(deltas, anchors));
}

BaselineModel train_baseline(BaselineKind kind, const nd::Matrix& xs, const nd::Matrix& ys,
                             const BaselineConfig& config, TrainStats* stats) {
  const TrainConfig& tc = config.train;
  tc.validate();
  if (xs.cols() == 0) throw ValidationError("data.n_train", "empty training set");
  BITRANS_EXPECT(xs.cols() == ys.cols(), "train_baseline: xs/ys sample count mismatch");
  const auto d = static_cast<std::size_t>(xs.rows());
  const auto k = static_cast<std::size_t>(ys.rows());
  const auto hidden = hidden_widths(tc.arch);

  BaselineModel model;
  model.kind = kind;
  nd::Rng rng(tc.seed);
  switch (kind) {
    case BaselineKind::linear:
      model.net = nd::DenseNet::mlp(d, {}, k, false, rng);
      break;
    case BaselineKind::mlp:
      model.net = nd::DenseNet::mlp(d, hidden, k, tc.arch.fourier, rng, tc.arch.fourier_scale);
      break;
    case BaselineKind::concat_transduction:
      if (xs.cols() < 2) throw ValidationError("data.n_train", "concat_transduction needs >= 2 samples");
      model.net = nd::DenseNet::mlp(2 * d, hidden, k, tc.arch.fourier, rng, tc.arch.fourier_scale);
      break;
    case BaselineKind::deepsets: {
      if (!config.goal) throw ValidationError("model.goal_slice", "deepsets needs a declared goal slice");
      const GoalSlice g = *config.goal;
      if (g.size == 0 || g.size >= d || g.begin + g.size > d)
        throw ValidationError("model.goal_slice", "goal slice must be a proper, nonempty block of the input");
      model.goal = g;
      const std::vector<std::size_t> branch_hidden(hidden.begin(), hidden.end());
      model.obs_branch = nd::DenseNet::mlp(d - g.size, branch_hidden, tc.arch.units, tc.arch.fourier, rng,
                                           tc.arch.fourier_scale);
      model.goal_branch =
          nd::DenseNet::mlp(g.size, branch_hidden, tc.arch.units, tc.arch.fourier, rng, tc.arch.fourier_scale);
      const std::size_t head_hidden[] = {tc.arch.units};
      model.head = nd::DenseNet::mlp(tc.arch.units, head_hidden, k, false, rng);
      break;
    }
  }

  nd::AdamState adam(tc.adam);
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st.step_losses.reserve(tc.steps);
  const auto B = static_cast<Eigen::Index>(tc.batch);
  const std::size_t n = static_cast<std::size_t>(xs.cols());
  nd::Matrix xb(xs.rows(), B), yb(ys.rows(), B);

  for (std::size_t s = 0; s < tc.steps; ++s) {
    adam.set_lr(tc.lr_at(s));
    nd::Matrix input;
    if (kind == BaselineKind::concat_transduction) {
      PairBatch pb = sample_pairs(xs, ys, tc.batch, rng);
      input = concat_rows(pb.deltas, pb.anchors);
      yb = pb.targets;
    } else {
      for (Eigen::Index b = 0; b < B; ++b) {
        const auto i = static_cast<Eigen::Index>(rng.index(n));
        xb.col(b) = xs.col(i);
        yb.col(b) = ys.col(i);
      }
      input = xb;
    }

    if (kind == BaselineKind::deepsets) {
      nd::ForwardCache c_obs, c_goal, c_head;
      const nd::Matrix emb = model.obs_branch.forward(obs_rows(input, model.goal), c_obs) +
                             model.goal_branch.forward(goal_rows(input, model.goal), c_goal);
      const nd::LossResult loss = nd::mse_loss(model.head.forward(emb, c_head), yb);
      st.step_losses.push_back(check_loss(loss.value, s));
      nd::NetGrads g_obs = model.obs_branch.zero_grads(), g_goal = model.goal_branch.zero_grads(),
                   g_head = model.head.zero_grads();
      const nd::Matrix grad_emb = model.head.backward(c_head, loss.grad, g_head);
      model.obs_branch.backward(c_obs, grad_emb, g_obs);
      model.goal_branch.backward(c_goal, grad_emb, g_goal);
      std::vector<std::span<double>> params;
      append(params, model.obs_branch.parameters());
      append(params, model.goal_branch.parameters());
      append(params, model.head.parameters());
      std::vector<std::span<const double>> grads;
      append(grads, g_obs);
      append(grads, g_goal);
      append(grads, g_head);
      adam.step(params, grads);
    } else {
      nd::ForwardCache cache;
      const nd::LossResult loss = nd::mse_loss(model.net.forward(input, cache), yb);
      st.step_losses.push_back(check_loss(loss.value, s));
      nd::NetGrads grads = model.net.zero_grads();
      model.net.backward(cache, loss.grad, grads);
      const auto params = model.net.parameters();
      adam.step(params, std::as_const(grads).spans());
    }
  }
  st.finish();
  return model;
}

nd::Matrix predict_concat(const BaselineModel& model, const nd::Matrix& x_test, const nd::Matrix& train_xs,
                          const DeltaBank& bank, const RhoPolicy& policy, nd::Rng& rng) {
  const auto chosen = draw_anchors(x_test, train_xs, bank, policy, rng);
  nd::Matrix deltas(x_test.rows(), x_test.cols()), anchors(x_test.rows(), x_test.cols());
  for (Eigen::Index c = 0; c < x_test.cols(); ++c) {
    anchors.col(c) = train_xs.col(static_cast<Eigen::Index>(chosen[static_cast<std::size_t>(c)]));
    deltas.col(c) = x_test.col(c) - anchors.col(c);
  }
  return model.predict_pairs(deltas, anchors);
}

}  // namespace bitrans::transduce
