#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bitrans/funcgen/dataset.hpp"

namespace bitrans::harness {

enum class Metric { mse, final_dist };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

struct ResultRecord {
  std::string experiment_id;
  std::string method;
  std::uint64_t seed = 0;
  funcgen::Split split = funcgen::Split::train;
  Metric metric = Metric::mse;
  double value = 0.0;  // finite, >= 0
  std::size_t n = 0;   // samples behind the estimate
  std::string config_hash;

  void validate() const;
};

bool operator==(const ResultRecord& a, const ResultRecord& b);

enum class Format { csv, jsonl };

std::string_view to_string(Format format);
Format format_from_string(std::string_view name);

/// Records ordered by (experiment_id, method, seed, split name, metric name).
/// Throws ContractViolation on an invalid record or a duplicate key.
std::vector<ResultRecord> sorted_records(std::vector<ResultRecord> records);

/// Header `experiment_id,method,seed,split,metric,value,n,config_hash` for
/// CSV, one object per line for JSONL. Values at 17 significant digits.
std::string format_results(const std::vector<ResultRecord>& records, Format format);
void emit_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path, Format format);

/// Reads either format; JSONL is detected by a leading '{'.
std::vector<ResultRecord> read_results(const std::filesystem::path& path);

/// Doubles as %.17g.
std::string format_double(double v);

}  // namespace bitrans::harness
