#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitrans/funcgen/dataset.hpp"
#include "bitrans/funcgen/functions.hpp"
#include "bitrans/imitate/reacher.hpp"
#include "bitrans/matcomp/theory.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/baselines.hpp"
#include "bitrans/transduce/training.hpp"
#include "bitrans/transduce/weighted.hpp"

namespace bitrans::harness {

enum class ExperimentKind { regress_1d, regress_2d, matcomp_bound, coverage, imitation, sweep };
enum class Method { linear, mlp, deepsets, concat_transduction, bilinear_transduction, weighted_transduction };

std::string to_string(ExperimentKind kind);
std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct DataConfig {
  funcgen::FunctionId function;
  funcgen::RangeSpec ranges;
  std::size_t n_train = 500;
  std::size_t n_test = 200;
  double noise = 0.0;
  /// Extra OOS evaluation regions, reported as "<id>/band<k>" (k from 1).
  std::vector<std::vector<funcgen::Box>> bands;
  std::size_t bank_cap = transduce::kDefaultBankCap;
  std::optional<transduce::GoalSlice> goal_slice;
};

/// Omega for weighted transduction is pretrained on labelled training pairs:
/// positive when both points sit on the same cell of the tiled function.
struct WeightingConfig {
  std::size_t n_positive = 300;
  std::size_t n_negative = 300;
  transduce::TrainConfig train;  // omega network and optimiser; K = 1
  transduce::WeightedSampling sampling = transduce::WeightedSampling::weight_loss;
  std::size_t pool_cap = 250000;
  bool joint = false;
  transduce::WeightedAnchor anchor = transduce::WeightedAnchor::argmax;
};

struct ImitationConfig {
  imitate::ReacherConfig env;
  std::size_t n_demos = 100;
  std::size_t n_eval = 50;
};

struct MatcompConfig {
  std::vector<std::size_t> ranks = {1, 2, 3, 4};
  std::size_t rows = 16;
  std::size_t cols = 16;
  std::size_t n1 = 8;
  std::size_t m1 = 8;
  std::size_t trials = 100;
  double eps_frac = 0.25;  // eps = eps_frac * sigma_p(M*11)
};

struct PlantedSection {
  matcomp::PlantedConfig problem;
  std::size_t runs = 10;
};

/// Training settings for one method: base sections with that method's
/// overrides applied.
struct MethodSettings {
  transduce::TrainConfig train;
  transduce::RhoPolicy rho;
};

struct ExperimentConfig {
  std::string id;
  ExperimentKind kind = ExperimentKind::regress_1d;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  std::vector<Method> methods;
  DataConfig data;
  transduce::TrainConfig train;  // "model" and "optim" sections
  transduce::RhoPolicy rho;
  std::map<Method, MethodSettings> overrides;
  WeightingConfig weighting;
  ImitationConfig imitation;
  MatcompConfig matcomp;
  PlantedSection planted;
  /// Sweep only: base document and grid of dotted paths to value lists.
  nlohmann::json sweep_base;
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> sweep_grid;

  /// Canonical form of the document this config was parsed from.
  nlohmann::json document;
  /// 16 hex digits of FNV-1a 64 over document.dump().
  std::string hash;

  MethodSettings settings_for(Method method) const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// ValidationError naming the dotted field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string config_hash(const nlohmann::json& doc);

/// Replicate r of a run: split_seed(seed, "replicate/<r>").
std::uint64_t replicate_seed(const ExperimentConfig& config, std::size_t r);

}  // namespace bitrans::harness
