#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "bitrans/harness/config.hpp"
#include "bitrans/harness/experiment.hpp"
#include "bitrans/harness/results.hpp"

namespace bitrans::harness {

/// One grid point: the base document with each grid path set, and id
/// "<sweep id>/g<k>". Points enumerate the grid with the last key fastest;
/// keys are in the document's sorted order.
struct SweepPoint {
  std::string experiment_id;
  nlohmann::json document;
};

std::vector<SweepPoint> expand_grid(const ExperimentConfig& sweep);

/// Sets a dotted path ("model.units", "overrides.mlp.optim.lr") in an
/// object, creating intermediate objects.
void set_path(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value);

struct SweepFailure {
  std::string experiment_id;
  std::string message;
  bool validation = false;  // config error rather than a runtime failure
};

struct SweepResult {
  std::vector<ResultRecord> records;
  std::vector<SweepFailure> failures;
  std::size_t runs = 0;
};

/// Runs every config; sweep configs are expanded to their grid points and
/// any other kind runs as run_experiment. A failing point is recorded and
/// the sweep continues.
SweepResult run_sweep(const std::vector<ExperimentConfig>& configs, const Progress& progress = {});

/// Aggregated statistic over seeds (and, for grid_mean, grid points).
struct AggregateRow {
  std::string aggregation;  // "grid_mean" or "best_per_method"
  std::string experiment;   // experiment id with grid components "g<k>" removed
  std::string method;
  funcgen::Split split = funcgen::Split::train;
  Metric metric = Metric::mse;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one value
  std::size_t count = 0;
  std::string selected;  // best_per_method: chosen grid point
};

/// grid_mean averages every record of (experiment, method, split, metric).
/// best_per_method picks, per (experiment, method), the grid point with the
/// lowest seed-mean OOS value (ties to the smaller id) and reports that
/// point's seed statistics for each split.
std::vector<AggregateRow> aggregate(const std::vector<ResultRecord>& records);

/// Header `aggregation,experiment,method,split,metric,mean,std,count,selected`.
std::string format_aggregate(const std::vector<AggregateRow>& rows, Format format);

}  // namespace bitrans::harness
