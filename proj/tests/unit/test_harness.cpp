#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bitrans/error.hpp"
#include "bitrans/harness/config.hpp"
#include "bitrans/harness/experiment.hpp"
#include "bitrans/harness/results.hpp"
#include "bitrans/harness/seed.hpp"
#include "bitrans/harness/sweep.hpp"

using namespace bitrans;
using namespace bitrans::harness;
using nlohmann::json;

namespace {

json tiny_regression() {
  return json::parse(R"({
    "id": "tiny", "kind": "regress_1d", "seed": 3, "replicates": 2,
    "methods": ["mlp", "bilinear_transduction"],
    "data": {"function": "sawtooth", "amplitude": 2, "period": 3,
             "train": [[[20, 40]]], "test": [[[40, 50]]], "n_train": 40, "n_test": 10,
             "bands": [[[[50, 60]]]]},
    "model": {"hidden_layers": 1, "units": 8, "segment": 2},
    "optim": {"lr": 1e-3, "batch": 8, "steps": 30}
  })");
}

std::string field_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

ResultRecord rec(std::string id, std::string method, std::uint64_t seed, funcgen::Split split, double v) {
  return {std::move(id), std::move(method), seed, split, Metric::mse, v, 10, "h"};
}

}  // namespace

TEST_CASE("split_seed is stable, label sensitive and collision free over 1e4 labels") {
  CHECK(split_seed(42, "data") == nd::derive_seed(42, "data"));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(split_seed(7, "label/" + std::to_string(i)));
  CHECK(seen.size() == 10000u);
  const auto a = split_seed(1, "x");
  split_seed(1, "y");
  CHECK(split_seed(1, "x") == a);
}

TEST_CASE("config parsing applies defaults, sections and overrides") {
  json doc = tiny_regression();
  doc["overrides"] = json::parse(R"({"bilinear_transduction": {"model": {"segment": 4}}})");
  const auto c = parse_config(doc);
  CHECK(c.id == "tiny");
  CHECK(c.kind == ExperimentKind::regress_1d);
  CHECK(c.train.arch.units == 8u);
  CHECK(c.settings_for(Method::mlp).train.arch.segment == 2u);
  CHECK(c.settings_for(Method::bilinear_transduction).train.arch.segment == 4u);
  CHECK(c.settings_for(Method::bilinear_transduction).train.arch.units == 8u);
  CHECK(c.data.bands.size() == 1u);
  CHECK(c.hash.size() == 16u);
}

TEST_CASE("strict parsing names the offending field") {
  json doc = tiny_regression();
  doc["model"]["unitz"] = 3;
  CHECK(field_of(doc) == "model.unitz");
  doc = tiny_regression();
  doc["optim"]["lr"] = -1.0;
  CHECK(field_of(doc).rfind("optim", 0) == 0);
  doc = tiny_regression();
  doc["methods"] = {"nope"};
  CHECK(field_of(doc) == "methods");
  doc = tiny_regression();
  doc.erase("id");
  CHECK(field_of(doc) == "id");
  doc = tiny_regression();
  doc["data"]["train"] = json::parse("[[[40, 20]]]");
  CHECK(field_of(doc) == "data.train[0][0]");
  doc = tiny_regression();
  doc["methods"] = {"weighted_transduction"};
  CHECK(field_of(doc) == "methods");
  CHECK_THROWS_AS(parse_config_text("{"), ValidationError);
}

TEST_CASE("config hash depends on content only") {
  const auto a = parse_config(tiny_regression());
  const auto b = parse_config(json::parse(tiny_regression().dump(2)));
  CHECK(a.hash == b.hash);
  json doc = tiny_regression();
  doc["seed"] = 4;
  CHECK(parse_config(doc).hash != a.hash);
}

TEST_CASE("one record gives a two-line CSV with 17 significant digits") {
  const std::vector<ResultRecord> r = {rec("e", "mlp", 1, funcgen::Split::oos, 0.1)};
  const auto text = format_results(r, Format::csv);
  CHECK(text == "experiment_id,method,seed,split,metric,value,n,config_hash\ne,mlp,1,oos,mse,0.10000000000000001,10,h\n");
}

TEST_CASE("results round trip through both formats and are sorted") {
  std::vector<ResultRecord> r = {rec("b", "mlp", 2, funcgen::Split::train, 1.0 / 3.0),
                                 rec("a", "mlp", 5, funcgen::Split::oos, 2.5e-7),
                                 rec("a", "mlp", 5, funcgen::Split::in_support, 0.0)};
  const auto dir = std::filesystem::temp_directory_path();
  for (auto f : {Format::csv, Format::jsonl}) {
    const auto path = dir / (std::string("bitrans_results_test.") + std::string(to_string(f)));
    emit_results(r, path, f);
    const auto back = read_results(path);
    std::filesystem::remove(path);
    CHECK(back == sorted_records(r));
    CHECK(back.front().experiment_id == "a");
    CHECK(back.front().split == funcgen::Split::in_support);
  }
  std::stringstream lines(format_results(r, Format::jsonl));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    CHECK(j.contains("config_hash"));
    ++n;
  }
  CHECK(n == 3);
}

TEST_CASE("invalid or duplicate records are rejected") {
  CHECK_THROWS_AS(sorted_records({rec("a", "m", 1, funcgen::Split::oos, -1.0)}), ContractViolation);
  CHECK_THROWS_AS(sorted_records({rec("a", "m", 1, funcgen::Split::oos, 1.0), rec("a", "m", 1, funcgen::Split::oos, 2.0)}),
                  ContractViolation);
  CHECK_THROWS(emit_results({}, "/tmp/never_written.csv", Format::csv));
  CHECK_THROWS_AS(emit_results({rec("a", "m", 1, funcgen::Split::oos, 1.0)}, "/nonexistent_dir/x.csv", Format::csv),
                  RuntimeFailure);
}

TEST_CASE("aggregation matches an independent recomputation") {
  const std::vector<ResultRecord> r = {rec("s/g0", "mlp", 1, funcgen::Split::oos, 0.1),
                                       rec("s/g1", "mlp", 1, funcgen::Split::oos, 0.3),
                                       rec("s/g0", "mlp", 1, funcgen::Split::train, 0.02),
                                       rec("s/g1", "mlp", 1, funcgen::Split::train, 0.04)};
  const auto rows = aggregate(r);
  int checked = 0;
  for (const auto& row : rows) {
    if (row.aggregation == "grid_mean" && row.split == funcgen::Split::oos) {
      CHECK(row.experiment == "s");
      CHECK(row.mean == doctest::Approx(0.2));
      CHECK(row.std == doctest::Approx(std::sqrt(0.02)));
      CHECK(row.count == 2u);
      ++checked;
    }
    if (row.aggregation == "best_per_method") {
      CHECK(row.selected == "s/g0");
      CHECK(row.mean == doctest::Approx(row.split == funcgen::Split::oos ? 0.1 : 0.02));
      ++checked;
    }
  }
  CHECK(checked == 3);
}

TEST_CASE("grid expansion covers the product of values") {
  const json doc = json::parse(R"({"id": "sw", "kind": "sweep",
    "base": {"id": "x", "kind": "regress_1d", "methods": ["mlp"],
             "data": {"function": "poly8", "train": [[[-1, 1]]], "test": [[[1, 1.6]]]}},
    "grid": {"model.hidden_layers": [2, 3], "model.units": [32, 512]}})");
  const auto c = parse_config(doc);
  const auto points = expand_grid(c);
  REQUIRE(points.size() == 4u);
  CHECK(points[0].experiment_id == "sw/g0");
  CHECK(points[1].document["model"]["units"] == 512);
  CHECK(points[2].document["model"]["hidden_layers"] == 3);
  for (const auto& p : points) CHECK_NOTHROW(parse_config(p.document));
}

TEST_CASE("sweep records failing points and continues") {
  json doc = json::parse(R"({"id": "sw", "kind": "sweep", "grid": {"model.units": [0, 4]}})");
  doc["base"] = tiny_regression();
  doc["base"]["methods"] = {"mlp"};
  doc["base"]["replicates"] = 1;
  const auto result = run_sweep({parse_config(doc)});
  CHECK(result.runs == 2u);
  REQUIRE(result.failures.size() == 1u);
  CHECK(result.failures[0].experiment_id == "sw/g0");
  CHECK(result.failures[0].validation);
  CHECK(!result.records.empty());
}

TEST_CASE("single-config sweep equals run_experiment and reruns are identical") {
  const auto c = parse_config(tiny_regression());
  const auto a = run_experiment(c);
  const auto b = run_sweep({c}).records;
  CHECK(format_results(a, Format::csv) == format_results(b, Format::csv));
  // 2 replicates x 2 methods x (3 splits + 1 band).
  CHECK(a.size() == 16u);
  std::size_t bands = 0;
  for (const auto& r : a) bands += r.experiment_id == "tiny/band1";
  CHECK(bands == 4u);
}

TEST_CASE("tiled pair labels mark same-cell pairs") {
  json doc = json::parse(R"({"id": "t", "kind": "regress_2d", "methods": ["weighted_transduction"],
    "data": {"function": "tiled2d", "tile_seed": 3, "train": [[[1, 5], [1, 5]], [[7, 11], [1, 5]]],
             "test": [[[7, 11], [7, 11]]], "n_train": 200, "n_test": 10}})");
  const auto c = parse_config(doc);
  const auto data = make_dataset(c, 1);
  const auto labels = tiled_pair_labels(data, 50, 50, 2);
  const funcgen::TargetFunction fn(data.function);
  std::size_t pos = 0;
  for (const auto& l : labels) {
    funcgen::Tiled2D::Cell a, q;
    REQUIRE(fn.tiled()->locate(l.anchor(0), l.anchor(1), a));
    REQUIRE(fn.tiled()->locate(l.query(0), l.query(1), q));
    CHECK((l.label == 1.0) == (a.i == q.i && a.j == q.j));
    pos += l.label == 1.0;
  }
  CHECK(pos == 50u);
  CHECK(labels.size() == 100u);
}

TEST_CASE("theory runs emit one line per trial") {
  const auto c = parse_config(json::parse(R"({"id": "m", "kind": "matcomp_bound", "seed": 2,
    "matcomp": {"ranks": [1, 2], "trials": 3, "eps_frac": 0.25}})"));
  const auto lines = run_theory(c);
  REQUIRE(lines.size() == 6u);
  for (const auto& l : lines) {
    CHECK(l.contains("trial"));
    CHECK(l.contains("eps"));
    CHECK(l.contains("lhs"));
    CHECK(l.contains("rhs"));
    CHECK(l.at("holds").get<bool>());
  }
  CHECK_THROWS_AS(run_experiment(c), ValidationError);
}
