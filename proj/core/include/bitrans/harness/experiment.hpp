#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitrans/funcgen/dataset.hpp"
#include "bitrans/harness/config.hpp"
#include "bitrans/harness/results.hpp"
#include "bitrans/imitate/reacher.hpp"
#include "bitrans/transduce/baselines.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/weighted.hpp"

namespace bitrans::harness {

/// Progress sink; may be empty.
using Progress = std::function<void(const std::string&)>;

/// A trained model of one method. Which members are set depends on the
/// method: bilinear for the two transduction methods, omega for weighted
/// transduction, baseline for the rest.
struct TrainedModel {
  Method method = Method::mlp;
  std::optional<transduce::BilinearPredictor> bilinear;
  std::optional<transduce::WeightingFunction> omega;
  std::optional<transduce::BaselineModel> baseline;
  transduce::TrainStats stats;
};

/// Regression data of one replicate (seed label "data").
funcgen::Dataset make_dataset(const ExperimentConfig& config, std::uint64_t replicate_seed);

/// Extra evaluation band k (from 1): n_test points, seed label "band/<k>".
funcgen::Dataset make_band(const ExperimentConfig& config, std::size_t k, std::uint64_t replicate_seed);

/// Omega labels for tiled2d: an ordered pair of training points is positive
/// when both sit on the same in-tile grid cell, so they differ by whole
/// tile shifts. Draws n_positive and n_negative pairs without replacement.
std::vector<transduce::LabeledPair> tiled_pair_labels(const funcgen::Dataset& data, std::size_t n_positive,
                                                      std::size_t n_negative, std::uint64_t seed);

/// Trains `method` on the train split (seed label "train/<method>").
TrainedModel train_regression(const ExperimentConfig& config, Method method, const funcgen::Dataset& data,
                              std::uint64_t replicate_seed);

/// Predictions for the columns of `queries`, anchoring on `train_xs`.
nd::Matrix predict_regression(const ExperimentConfig& config, const TrainedModel& model, const nd::Matrix& train_xs,
                              const nd::Matrix& queries, nd::Rng& rng);

/// Trains a policy for the imitation task from demos.
TrainedModel train_imitation(const ExperimentConfig& config, Method method, const imitate::TrajectoryDataset& demos,
                             std::uint64_t replicate_seed);

/// Final goal distances of closed-loop rollouts, one per goal column.
std::vector<double> evaluate_imitation(const ExperimentConfig& config, const TrainedModel& model,
                                       const imitate::TrajectoryDataset& demos, const nd::Matrix& goals, nd::Rng& rng);

/// n goals drawn uniformly from `box` (seed label "goals/<label>").
nd::Matrix sample_goals(const funcgen::Box& box, std::size_t n, std::uint64_t seed);

/// Runs every replicate and method of a regress_1d, regress_2d or imitation
/// config. Regression records hold split MSE; imitation records hold the
/// median final distance over evaluation goals. Deterministic in config.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config, const Progress& progress = {});

/// matcomp_bound: one JSON object per (rank, trial) with trial, eps, lhs,
/// rhs, holds and diagnostics. coverage: one object per planted run with
/// the coverage factors and the risk-ratio report.
std::vector<nlohmann::json> run_theory(const ExperimentConfig& config, const Progress& progress = {});

}  // namespace bitrans::harness
