#include "bitrans/harness/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "bitrans/error.hpp"
#include "bitrans/harness/seed.hpp"
#include "bitrans/imitate/trajectory.hpp"
#include "bitrans/matcomp/block.hpp"
#include "bitrans/matcomp/theory.hpp"
#include "bitrans/ndcore/loss.hpp"
#include "bitrans/transduce/training.hpp"

namespace bitrans::harness {
namespace {

using funcgen::Split;

transduce::BaselineKind baseline_kind(Method m) {
  switch (m) {
    case Method::linear: return transduce::BaselineKind::linear;
    case Method::mlp: return transduce::BaselineKind::mlp;
    case Method::deepsets: return transduce::BaselineKind::deepsets;
    case Method::concat_transduction: return transduce::BaselineKind::concat_transduction;
    default: break;
  }
  throw ContractViolation("baseline_kind: " + to_string(m) + " is not a baseline");
}

bool is_baseline(Method m) { return m != Method::bilinear_transduction && m != Method::weighted_transduction; }

double median(std::vector<double> v) {
  BITRANS_EXPECT(!v.empty(), "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void say(const Progress& progress, const std::string& msg) {
  if (progress) progress(msg);
}

nlohmann::json kappa_json(const matcomp::Kappa& k) {
  return k.is_infinite() ? nlohmann::json("inf") : nlohmann::json(k.value());
}

ResultRecord record(const ExperimentConfig& config, std::string id, Method method, std::uint64_t seed, Split split,
                    Metric metric, double value, std::size_t n) {
  if (!std::isfinite(value)) throw RuntimeFailure(to_string(method) + ": non-finite " + std::string(to_string(metric)));
  return ResultRecord{std::move(id), to_string(method), seed, split, metric, value, n, config.hash};
}

std::vector<ResultRecord> run_regression(const ExperimentConfig& config, const Progress& progress) {
  std::vector<ResultRecord> records;
  for (std::size_t r = 0; r < config.replicates; ++r) {
    const std::uint64_t rep = replicate_seed(config, r);
    const funcgen::Dataset data = make_dataset(config, rep);
    std::vector<funcgen::Dataset> bands;
    for (std::size_t k = 1; k <= config.data.bands.size(); ++k) bands.push_back(make_band(config, k, rep));
    const nd::Matrix train_xs = data.xs(Split::train);
    for (Method method : config.methods) {
      say(progress, config.id + ": replicate " + std::to_string(r) + " " + to_string(method));
      const TrainedModel model = train_regression(config, method, data, rep);
      nd::Rng rng(split_seed(rep, "eval/" + to_string(method)));
      auto mse = [&](const nd::Matrix& xs, const nd::Matrix& ys) {
        return nd::mse_loss(predict_regression(config, model, train_xs, xs, rng), ys).value;
      };
      for (Split split : {Split::train, Split::in_support, Split::oos}) {
        if (data.count(split) == 0) continue;
        records.push_back(record(config, config.id, method, rep, split, Metric::mse,
                                 mse(data.xs(split), data.ys(split)), data.count(split)));
      }
      for (std::size_t k = 0; k < bands.size(); ++k) {
        const auto& band = bands[k];
        records.push_back(record(config, config.id + "/band" + std::to_string(k + 1), method, rep, Split::oos,
                                 Metric::mse, mse(band.xs(Split::oos), band.ys(Split::oos)), band.count(Split::oos)));
      }
    }
  }
  return records;
}

std::vector<ResultRecord> run_imitation(const ExperimentConfig& config, const Progress& progress) {
  const auto& im = config.imitation;
  std::vector<ResultRecord> records;
  for (std::size_t r = 0; r < config.replicates; ++r) {
    const std::uint64_t rep = replicate_seed(config, r);
    const auto demos = imitate::collect_demos(im.env, im.n_demos, im.env.train_goals, split_seed(rep, "demos"));
    const nd::Matrix demo_goals = demos.goals();
    const nd::Matrix train_goals = demo_goals.leftCols(static_cast<Eigen::Index>(std::min(im.n_eval, im.n_demos)));
    const nd::Matrix in_goals = sample_goals(im.env.train_goals, im.n_eval, split_seed(rep, "goals/in_support"));
    const nd::Matrix oos_goals = sample_goals(im.env.oos_goals, im.n_eval, split_seed(rep, "goals/oos"));
    for (Method method : config.methods) {
      say(progress, config.id + ": replicate " + std::to_string(r) + " " + to_string(method));
      const TrainedModel model = train_imitation(config, method, demos, rep);
      nd::Rng rng(split_seed(rep, "eval/" + to_string(method)));
      const std::pair<Split, const nd::Matrix*> splits[] = {
          {Split::train, &train_goals}, {Split::in_support, &in_goals}, {Split::oos, &oos_goals}};
      for (const auto& [split, goals] : splits) {
        const auto dists = evaluate_imitation(config, model, demos, *goals, rng);
        records.push_back(record(config, config.id, method, rep, split, Metric::final_dist, median(dists),
                                 dists.size()));
      }
    }
  }
  return records;
}

std::vector<nlohmann::json> run_matcomp_bound(const ExperimentConfig& config, const Progress& progress) {
  const auto& mc = config.matcomp;
  std::vector<nlohmann::json> lines;
  const auto rows = static_cast<Eigen::Index>(mc.rows), cols = static_cast<Eigen::Index>(mc.cols);
  const auto n1 = static_cast<Eigen::Index>(mc.n1), m1 = static_cast<Eigen::Index>(mc.m1);
  for (std::size_t p : mc.ranks) {
    say(progress, config.id + ": rank " + std::to_string(p));
    for (std::size_t k = 0; k < mc.trials; ++k) {
      const std::string label = "rank/" + std::to_string(p) + "/trial/" + std::to_string(k);
      nd::Rng rng(split_seed(config.seed, label + "/star"));
      const auto star = matcomp::random_low_rank(rows, cols, p, rng);
      const auto blocks = matcomp::BlockMatrix::from_full(star.product(), n1, m1);
      const double sigma_p = matcomp::bound_report(blocks, blocks, p).sigma_p;
      const auto reports = matcomp::verify_perturbation_bound(star, n1, m1, mc.eps_frac * sigma_p, 1,
                                                              split_seed(config.seed, label + "/noise"));
      const auto& rep = reports.front();
      lines.push_back({{"trial", k},
                       {"rank", p},
                       {"eps", rep.eps},
                       {"lhs", rep.lhs},
                       {"rhs", rep.rhs},
                       {"holds", rep.holds},
                       {"sigma_p", rep.sigma_p},
                       {"m_bound", rep.m_bound},
                       {"m_norm", star.product().norm()},
                       {"precondition_met", rep.precondition_met}});
    }
  }
  return lines;
}

std::vector<nlohmann::json> run_coverage(const ExperimentConfig& config, const Progress& progress) {
  std::vector<nlohmann::json> lines;
  for (std::size_t r = 0; r < config.planted.runs; ++r) {
    say(progress, config.id + ": planted run " + std::to_string(r));
    const std::uint64_t rep = split_seed(config.seed, "planted/" + std::to_string(r));
    matcomp::PlantedConfig pc = config.planted.problem;
    pc.seed = split_seed(rep, "problem");
    const auto problem = matcomp::make_planted(pc);
    transduce::TrainConfig train = config.train;
    train.seed = split_seed(rep, "train");
    const auto run = matcomp::planted_risk_check(problem, train);
    const auto& rr = run.report;
    lines.push_back({{"run", r},
                     {"kappa_train", kappa_json(problem.coverage.kappa_train)},
                     {"kappa_test", kappa_json(problem.coverage.kappa_test)},
                     {"kappa", kappa_json(rr.kappa)},
                     {"r_train", rr.r_train},
                     {"r_test", rr.r_test},
                     {"m_bound", rr.m_bound},
                     {"sigma_sq", rr.sigma_sq},
                     {"bound", std::isfinite(rr.bound) ? nlohmann::json(rr.bound) : nlohmann::json("inf")},
                     {"precondition_met", rr.precondition_met},
                     {"holds", rr.holds}});
  }
  return lines;
}

}  // namespace

funcgen::Dataset make_dataset(const ExperimentConfig& config, std::uint64_t replicate_seed) {
  const auto& d = config.data;
  return funcgen::sample_dataset(d.function, d.ranges, d.n_train, d.n_test, d.noise, split_seed(replicate_seed, "data"));
}

funcgen::Dataset make_band(const ExperimentConfig& config, std::size_t k, std::uint64_t replicate_seed) {
  BITRANS_EXPECT(k >= 1 && k <= config.data.bands.size(), "make_band: band index out of range");
  const auto& d = config.data;
  // The band is the OOS region; its train draw is unused but keeps the sampler's contract.
  const funcgen::RangeSpec ranges{d.ranges.train, d.bands[k - 1]};
  auto band = funcgen::sample_dataset(d.function, ranges, 2, d.n_test, 0.0,
                                      split_seed(replicate_seed, "band/" + std::to_string(k)));
  return band;
}

std::vector<transduce::LabeledPair> tiled_pair_labels(const funcgen::Dataset& data, std::size_t n_positive,
                                                      std::size_t n_negative, std::uint64_t seed) {
  const funcgen::TargetFunction fn(data.function);
  const funcgen::Tiled2D* tiled = fn.tiled();
  BITRANS_EXPECT(tiled != nullptr, "tiled_pair_labels needs a tiled2d dataset");
  const nd::Matrix xs = data.xs(Split::train);
  const auto n = static_cast<std::size_t>(xs.cols());
  std::vector<std::pair<int, int>> cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    funcgen::Tiled2D::Cell c;
    BITRANS_EXPECT(tiled->locate(xs(0, i), xs(1, i), c), "training point between tiles");
    cell[i] = {c.i, c.j};
  }
  std::vector<std::pair<std::size_t, std::size_t>> pos, neg;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) (cell[i] == cell[j] ? pos : neg).emplace_back(i, j);
  nd::Rng rng(seed);
  auto take = [&](std::vector<std::pair<std::size_t, std::size_t>>& pool, std::size_t count) {
    count = std::min(count, pool.size());
    for (std::size_t k = 0; k < count; ++k) std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
    pool.resize(count);
  };
  take(pos, n_positive);
  take(neg, n_negative);
  std::vector<transduce::LabeledPair> labels;
  for (auto [i, j] : pos) labels.push_back({xs.col(static_cast<Eigen::Index>(j)), xs.col(static_cast<Eigen::Index>(i)), 1.0});
  for (auto [i, j] : neg) labels.push_back({xs.col(static_cast<Eigen::Index>(j)), xs.col(static_cast<Eigen::Index>(i)), 0.0});
  return labels;
}

TrainedModel train_regression(const ExperimentConfig& config, Method method, const funcgen::Dataset& data,
                              std::uint64_t replicate_seed) {
  MethodSettings s = config.settings_for(method);
  s.train.seed = split_seed(replicate_seed, "train/" + to_string(method));
  const nd::Matrix xs = data.xs(Split::train);
  const nd::Matrix ys = data.ys(Split::train);
  TrainedModel model;
  model.method = method;
  if (is_baseline(method)) {
    model.baseline = transduce::train_baseline(baseline_kind(method), xs, ys, {s.train, config.data.goal_slice},
                                               &model.stats);
  } else if (method == Method::bilinear_transduction) {
    model.bilinear = transduce::train_bilinear(xs, ys, s.train, &model.stats);
  } else {
    const auto& w = config.weighting;
    const auto labels = tiled_pair_labels(data, w.n_positive, w.n_negative, split_seed(replicate_seed, "omega/labels"));
    transduce::TrainConfig omega_train = w.train;
    omega_train.seed = split_seed(replicate_seed, "omega/train");
    transduce::WeightedConfig wc{s.train, w.sampling, w.pool_cap, w.joint};
    if (w.joint) {
      // Joint training starts from an untrained omega with omega_train's shape.
      nd::Rng init(omega_train.seed);
      transduce::WeightingFunction omega(
          transduce::make_bilinear(static_cast<std::size_t>(xs.rows()), 1, omega_train.arch, init));
      model.bilinear = transduce::train_weighted_joint(xs, ys, omega, labels, wc, &model.stats);
      model.omega = std::move(omega);
    } else {
      model.omega = transduce::train_weighting(labels, omega_train);
      model.bilinear = transduce::train_weighted(xs, ys, *model.omega, wc, &model.stats);
    }
  }
  return model;
}

nd::Matrix predict_regression(const ExperimentConfig& config, const TrainedModel& model, const nd::Matrix& train_xs,
                              const nd::Matrix& queries, nd::Rng& rng) {
  const MethodSettings s = config.settings_for(model.method);
  switch (model.method) {
    case Method::bilinear_transduction: {
      BITRANS_EXPECT(model.bilinear.has_value(), "bilinear model missing");
      const auto bank = transduce::DeltaBank::build(train_xs, config.data.bank_cap, split_seed(config.seed, "bank"));
      return transduce::predict_transductive_batch(*model.bilinear, queries, train_xs, bank, s.rho, rng);
    }
    case Method::weighted_transduction:
      BITRANS_EXPECT(model.bilinear && model.omega, "weighted model missing");
      return transduce::predict_weighted_batch(*model.bilinear, *model.omega, queries, train_xs,
                                               config.weighting.anchor, &rng);
    case Method::concat_transduction: {
      BITRANS_EXPECT(model.baseline.has_value(), "baseline model missing");
      const auto bank = transduce::DeltaBank::build(train_xs, config.data.bank_cap, split_seed(config.seed, "bank"));
      return transduce::predict_concat(*model.baseline, queries, train_xs, bank, s.rho, rng);
    }
    default:
      BITRANS_EXPECT(model.baseline.has_value(), "baseline model missing");
      return model.baseline->predict(queries);
  }
}

TrainedModel train_imitation(const ExperimentConfig& config, Method method, const imitate::TrajectoryDataset& demos,
                             std::uint64_t replicate_seed) {
  MethodSettings s = config.settings_for(method);
  s.train.seed = split_seed(replicate_seed, "train/" + to_string(method));
  TrainedModel model;
  model.method = method;
  if (method == Method::bilinear_transduction) {
    model.bilinear = imitate::train_trajectory_transduction(demos, s.train, &model.stats);
    return model;
  }
  BITRANS_EXPECT(is_baseline(method) && method != Method::concat_transduction,
                 "imitation supports linear, mlp, deepsets and bilinear_transduction");
  nd::Matrix states, actions;
  imitate::flatten_demos(demos, states, actions);
  // States are (position, goal); deepsets splits off the goal.
  const transduce::GoalSlice goal{2, 2};
  model.baseline = transduce::train_baseline(baseline_kind(method), states, actions, {s.train, goal}, &model.stats);
  return model;
}

std::vector<double> evaluate_imitation(const ExperimentConfig& config, const TrainedModel& model,
                                       const imitate::TrajectoryDataset& demos, const nd::Matrix& goals, nd::Rng& rng) {
  const MethodSettings s = config.settings_for(model.method);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(goals.cols()));
  for (Eigen::Index c = 0; c < goals.cols(); ++c) {
    const nd::Vector goal = goals.col(c);
    if (model.bilinear) {
      dists.push_back(
          imitate::rollout_transductive(config.imitation.env, *model.bilinear, goal, demos, s.rho, rng).final_dist);
    } else {
      BITRANS_EXPECT(model.baseline.has_value(), "imitation model missing");
      dists.push_back(imitate::rollout_direct(config.imitation.env, *model.baseline, goal).final_dist);
    }
  }
  return dists;
}

nd::Matrix sample_goals(const funcgen::Box& box, std::size_t n, std::uint64_t seed) {
  nd::Rng rng(seed);
  nd::Matrix goals(static_cast<Eigen::Index>(box.size()), static_cast<Eigen::Index>(n));
  const std::vector<funcgen::Box> region{box};
  for (Eigen::Index c = 0; c < goals.cols(); ++c) goals.col(c) = funcgen::sample_region(region, rng);
  return goals;
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config, const Progress& progress) {
  switch (config.kind) {
    case ExperimentKind::regress_1d:
    case ExperimentKind::regress_2d: return run_regression(config, progress);
    case ExperimentKind::imitation: return run_imitation(config, progress);
    default: break;
  }
  throw ValidationError("kind", to_string(config.kind) + " does not produce result records");
}

std::vector<nlohmann::json> run_theory(const ExperimentConfig& config, const Progress& progress) {
  if (config.kind == ExperimentKind::matcomp_bound) return run_matcomp_bound(config, progress);
  if (config.kind == ExperimentKind::coverage) return run_coverage(config, progress);
  throw ValidationError("kind", to_string(config.kind) + " is not a theory check");
}

}  // namespace bitrans::harness
