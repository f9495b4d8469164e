#include "bitrans/harness/sweep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <tuple>

#include "bitrans/error.hpp"

namespace bitrans::harness {
namespace {

bool is_grid_component(const std::string& s) {
  return s.size() > 1 && s[0] == 'g' &&
         std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

/// Experiment id without grid components, and the id up to the last grid
/// component (the grid point).
std::pair<std::string, std::string> split_id(const std::string& id) {
  std::string family, point;
  std::string prefix;
  std::size_t pos = 0;
  while (pos <= id.size()) {
    const std::size_t next = std::min(id.find('/', pos), id.size());
    const std::string part = id.substr(pos, next - pos);
    prefix += (prefix.empty() ? "" : "/") + part;
    if (is_grid_component(part)) point = prefix;
    else family += (family.empty() ? "" : "/") + part;
    pos = next + 1;
  }
  return {family, point.empty() ? family : point};
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

void set_path(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value) {
  BITRANS_EXPECT(!dotted.empty(), "set_path: empty path");
  nlohmann::json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', pos);
    const std::string key = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw ValidationError("grid." + dotted, "empty path component");
    if (!node->is_object()) throw ValidationError("grid." + dotted, "path runs through a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = nlohmann::json::object();
    pos = dot + 1;
  }
}

std::vector<SweepPoint> expand_grid(const ExperimentConfig& sweep) {
  BITRANS_EXPECT(sweep.kind == ExperimentKind::sweep, "expand_grid needs a sweep config");
  std::size_t total = 1;
  for (const auto& [path, values] : sweep.sweep_grid) total *= values.size();
  std::vector<SweepPoint> points;
  points.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    nlohmann::json doc = sweep.sweep_base;
    std::size_t rest = k;
    for (auto it = sweep.sweep_grid.rbegin(); it != sweep.sweep_grid.rend(); ++it) {
      set_path(doc, it->first, it->second[rest % it->second.size()]);
      rest /= it->second.size();
    }
    const std::string id = sweep.id + "/g" + std::to_string(k);
    doc["id"] = id;
    points.push_back({id, std::move(doc)});
  }
  return points;
}

SweepResult run_sweep(const std::vector<ExperimentConfig>& configs, const Progress& progress) {
  BITRANS_EXPECT(!configs.empty(), "run_sweep needs at least one config");
  SweepResult out;
  auto run_one = [&](const std::string& id, auto&& make) {
    ++out.runs;
    try {
      const ExperimentConfig c = make();
      if (c.kind == ExperimentKind::sweep) throw ValidationError("kind", "nested sweeps are not supported");
      auto records = run_experiment(c, progress);
      out.records.insert(out.records.end(), records.begin(), records.end());
    } catch (const ValidationError& e) {
      out.failures.push_back({id, std::string(e.field()) + ": " + e.what(), true});
    } catch (const std::exception& e) {
      out.failures.push_back({id, e.what(), false});
    }
    if (progress && !out.failures.empty() && out.failures.back().experiment_id == id)
      progress(id + ": failed: " + out.failures.back().message);
  };
  for (const auto& config : configs) {
    if (config.kind != ExperimentKind::sweep) {
      run_one(config.id, [&] { return config; });
      continue;
    }
    for (const auto& point : expand_grid(config))
      run_one(point.experiment_id, [&] { return parse_config(point.document); });
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;  // family, method, split, metric
  std::map<Key, std::vector<double>> pooled;
  // (family, method) -> grid point -> (split, metric) -> values
  std::map<std::pair<std::string, std::string>,
           std::map<std::string, std::map<std::pair<std::string, std::string>, std::vector<double>>>>
      by_point;
  for (const auto& r : sorted_records(records)) {
    const auto [family, point] = split_id(r.experiment_id);
    const std::string split(funcgen::to_string(r.split)), metric(to_string(r.metric));
    pooled[{family, r.method, split, metric}].push_back(r.value);
    by_point[{family, r.method}][point][{split, metric}].push_back(r.value);
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, values] : pooled) {
    const auto s = stats(values);
    rows.push_back({"grid_mean", std::get<0>(key), std::get<1>(key), funcgen::split_from_string(std::get<2>(key)),
                    metric_from_string(std::get<3>(key)), s.mean, s.std, s.count, ""});
  }
  for (const auto& [fm, points] : by_point) {
    const std::string* best = nullptr;
    double best_value = 0.0;
    for (const auto& [point, cells] : points) {
      for (const auto& [sm, values] : cells) {
        if (sm.first != "oos") continue;
        const double m = stats(values).mean;
        if (!best || m < best_value) {
          best = &point;
          best_value = m;
        }
      }
    }
    if (!best) continue;  // no OOS records to select on
    for (const auto& [sm, values] : points.at(*best)) {
      const auto s = stats(values);
      rows.push_back({"best_per_method", fm.first, fm.second, funcgen::split_from_string(sm.first),
                      metric_from_string(sm.second), s.mean, s.std, s.count, *best});
    }
  }
  return rows;
}

std::string format_aggregate(const std::vector<AggregateRow>& rows, Format format) {
  std::string out;
  if (format == Format::csv) out = "aggregation,experiment,method,split,metric,mean,std,count,selected\n";
  for (const auto& r : rows) {
    const std::string split(funcgen::to_string(r.split)), metric(to_string(r.metric));
    if (format == Format::csv) {
      out += r.aggregation + ',' + r.experiment + ',' + r.method + ',' + split + ',' + metric + ',' +
             format_double(r.mean) + ',' + format_double(r.std) + ',' + std::to_string(r.count) + ',' + r.selected +
             '\n';
    } else {
      out += "{\"aggregation\":\"" + r.aggregation + "\",\"experiment\":" + nlohmann::json(r.experiment).dump() +
             ",\"method\":" + nlohmann::json(r.method).dump() + ",\"split\":\"" + split + "\",\"metric\":\"" +
             metric + "\",\"mean\":" + format_double(r.mean) + ",\"std\":" + format_double(r.std) +
             ",\"count\":" + std::to_string(r.count) + ",\"selected\":" + nlohmann::json(r.selected).dump() + "}\n";
    }
  }
  return out;
}

}  // namespace bitrans::harness
