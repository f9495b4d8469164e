#include "bitrans/harness/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "bitrans/error.hpp"

namespace bitrans::harness {
namespace {

auto key(const ResultRecord& r) {
  return std::make_tuple(std::string_view(r.experiment_id), std::string_view(r.method), r.seed,
                         funcgen::to_string(r.split), to_string(r.metric));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size() || s.empty() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("results." + what, "bad integer '" + s + "'");
  }
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("results.value", "bad number '" + s + "'");
  }
}

std::string check_plain(const std::string& s, const char* what) {
  BITRANS_EXPECT(s.find_first_of(",\n\"") == std::string::npos,
                 std::string("results: ") + what + " must not contain commas, quotes or newlines");
  return s;
}

}  // namespace

std::string_view to_string(Metric metric) { return metric == Metric::mse ? "mse" : "final_dist"; }

Metric metric_from_string(std::string_view name) {
  if (name == "mse") return Metric::mse;
  if (name == "final_dist") return Metric::final_dist;
  throw ValidationError("metric", "unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(Format format) { return format == Format::csv ? "csv" : "jsonl"; }

Format format_from_string(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "jsonl") return Format::jsonl;
  throw ValidationError("format", "expected 'csv' or 'jsonl', got '" + std::string(name) + "'");
}

void ResultRecord::validate() const {
  BITRANS_EXPECT(!experiment_id.empty(), "result record needs an experiment id");
  BITRANS_EXPECT(!method.empty(), "result record needs a method");
  BITRANS_EXPECT(std::isfinite(value) && value >= 0.0, "result value must be finite and nonnegative");
  check_plain(experiment_id, "experiment_id");
  check_plain(method, "method");
  check_plain(config_hash, "config_hash");
}

bool operator==(const ResultRecord& a, const ResultRecord& b) {
  return key(a) == key(b) && a.value == b.value && a.n == b.n && a.config_hash == b.config_hash;
}

std::vector<ResultRecord> sorted_records(std::vector<ResultRecord> records) {
  for (const auto& r : records) r.validate();
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < records.size(); ++i)
    BITRANS_EXPECT(key(records[i - 1]) != key(records[i]),
                   "duplicate result record for " + records[i].experiment_id + "/" + records[i].method);
  return records;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_results(const std::vector<ResultRecord>& records, Format format) {
  const auto rows = sorted_records(records);
  std::string out;
  if (format == Format::csv) {
    out = "experiment_id,method,seed,split,metric,value,n,config_hash\n";
    for (const auto& r : rows) {
      out += r.experiment_id + ',' + r.method + ',' + std::to_string(r.seed) + ',' +
             std::string(funcgen::to_string(r.split)) + ',' + std::string(to_string(r.metric)) + ',' +
             format_double(r.value) + ',' + std::to_string(r.n) + ',' + r.config_hash + '\n';
    }
    return out;
  }
  // Built by hand so the value keeps the same 17-digit text as the CSV.
  for (const auto& r : rows) {
    out += "{\"experiment_id\":" + nlohmann::json(r.experiment_id).dump() +
           ",\"method\":" + nlohmann::json(r.method).dump() + ",\"seed\":" + std::to_string(r.seed) +
           ",\"split\":\"" + std::string(funcgen::to_string(r.split)) + "\",\"metric\":\"" +
           std::string(to_string(r.metric)) + "\",\"value\":" + format_double(r.value) +
           ",\"n\":" + std::to_string(r.n) + ",\"config_hash\":" + nlohmann::json(r.config_hash).dump() + "}\n";
  }
  return out;
}

void emit_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path, Format format) {
  BITRANS_EXPECT(!records.empty(), "emit_results needs at least one record");
  const std::string text = format_results(records, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write results to " + path.string());
  out << text;
  if (!out) throw RuntimeFailure("write failed for " + path.string());
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("results", "cannot read " + path.string());
  std::vector<ResultRecord> records;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ResultRecord r;
    if (line.front() == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        r.experiment_id = j.at("experiment_id").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.split = funcgen::split_from_string(j.at("split").get<std::string>());
        r.metric = metric_from_string(j.at("metric").get<std::string>());
        r.value = j.at("value").get<double>();
        r.n = j.at("n").get<std::size_t>();
        r.config_hash = j.at("config_hash").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("results", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      if (!header_seen) {
        if (line != "experiment_id,method,seed,split,metric,value,n,config_hash")
          throw ValidationError("results", path.string() + ": unexpected CSV header");
        header_seen = true;
        continue;
      }
      const auto cells = split_csv_line(line);
      if (cells.size() != 8)
        throw ValidationError("results", path.string() + ":" + std::to_string(line_no) + ": expected 8 columns");
      r.experiment_id = cells[0];
      r.method = cells[1];
      r.seed = parse_u64(cells[2], "seed");
      try {
        r.split = funcgen::split_from_string(cells[3]);
      } catch (const std::exception&) {
        throw ValidationError("results.split", "unknown split '" + cells[3] + "'");
      }
      r.metric = metric_from_string(cells[4]);
      r.value = parse_double(cells[5]);
      r.n = parse_u64(cells[6], "n");
      r.config_hash = cells[7];
    }
    if (!std::isfinite(r.value) || r.value < 0.0)
      throw ValidationError("results.value", path.string() + ":" + std::to_string(line_no) + ": invalid value");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace bitrans::harness
