// Command line front end: generate, train, eval, matcomp, imitate, sweep, report.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bitrans/error.hpp"
#include "bitrans/funcgen/dataset.hpp"
#include "bitrans/harness/config.hpp"
#include "bitrans/harness/experiment.hpp"
#include "bitrans/harness/results.hpp"
#include "bitrans/harness/seed.hpp"
#include "bitrans/harness/sweep.hpp"
#include "bitrans/imitate/reacher.hpp"
#include "bitrans/ndcore/loss.hpp"
#include "bitrans/transduce/checkpoint.hpp"
#include "bitrans/transduce/delta_bank.hpp"

namespace fs = std::filesystem;
using namespace bitrans;
using harness::ExperimentConfig;
using harness::ExperimentKind;
using harness::Method;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string format = "csv";
  bool quiet = false;
};

void log(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "[bitrans] " << msg << '\n';
}

harness::Progress progress(const Globals& g) {
  return [&g](const std::string& msg) { log(g, msg); };
}

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw ValidationError("config", "--config is required for this subcommand");
  std::ifstream in(g.config);
  if (!in) throw ValidationError("config", "cannot read " + g.config);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  if (g.seed) {
    if (doc.is_object() && doc.value("kind", "") == "sweep" && doc.contains("base") && doc["base"].is_object())
      doc["base"]["seed"] = *g.seed;
    else if (doc.is_object())
      doc["seed"] = *g.seed;
  }
  return harness::parse_config(doc);
}

harness::Format format(const Globals& g) { return harness::format_from_string(g.format); }

fs::path out_dir(const Globals& g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string file_stem(const std::string& id) {
  std::string s = id;
  for (char& c : s)
    if (c == '/' || c == '\\') c = '_';
  return s;
}

fs::path results_path(const Globals& g, const std::string& stem) {
  return out_dir(g) / (file_stem(stem) + "." + g.format);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw RuntimeFailure("cannot write " + path.string());
}

void write_json_lines(const fs::path& path, const std::vector<nlohmann::json>& lines) {
  std::string text;
  for (const auto& l : lines) text += l.dump() + '\n';
  write_text(path, text);
}

void require_regression(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::regress_1d && c.kind != ExperimentKind::regress_2d)
    throw ValidationError("kind", "this subcommand needs a regress_1d or regress_2d config");
}

Method pick_method(const ExperimentConfig& c, const std::string& name) {
  if (!name.empty()) return harness::method_from_string(name);
  if (c.methods.size() != 1) throw ValidationError("methods", "config lists several methods; pass --method");
  return c.methods.front();
}

funcgen::Dataset dataset_for(const Globals& g, const ExperimentConfig& c, const std::string& data_path) {
  if (!data_path.empty()) return funcgen::read_dataset_csv(data_path);
  log(g, "no --data given; sampling replicate 0 from the config");
  return harness::make_dataset(c, harness::replicate_seed(c, 0));
}

int cmd_generate(const Globals& g) {
  const auto c = load(g);
  if (c.kind == ExperimentKind::imitation) {
    for (std::size_t r = 0; r < c.replicates; ++r) {
      const auto rep = harness::replicate_seed(c, r);
      const auto demos = imitate::collect_demos(c.imitation.env, c.imitation.n_demos, c.imitation.env.train_goals,
                                                harness::split_seed(rep, "demos"));
      const auto path = out_dir(g) / (file_stem(c.id) + "_r" + std::to_string(r) + "_demos.jsonl");
      imitate::write_demos_jsonl(demos, path);
      log(g, "wrote " + path.string());
    }
    return 0;
  }
  require_regression(c);
  for (std::size_t r = 0; r < c.replicates; ++r) {
    const auto rep = harness::replicate_seed(c, r);
    const auto path = out_dir(g) / (file_stem(c.id) + "_r" + std::to_string(r) + ".csv");
    funcgen::write_dataset_csv(harness::make_dataset(c, rep), path);
    log(g, "wrote " + path.string());
    for (std::size_t k = 1; k <= c.data.bands.size(); ++k) {
      const auto band_path =
          out_dir(g) / (file_stem(c.id) + "_r" + std::to_string(r) + "_band" + std::to_string(k) + ".csv");
      funcgen::write_dataset_csv(harness::make_band(c, k, rep), band_path);
      log(g, "wrote " + band_path.string());
    }
  }
  return 0;
}

int cmd_train(const Globals& g, const std::string& method_name, const std::string& data_path) {
  const auto c = load(g);
  require_regression(c);
  const Method method = pick_method(c, method_name);
  const auto data = dataset_for(g, c, data_path);
  log(g, "training " + harness::to_string(method));
  const auto model = harness::train_regression(c, method, data, c.seed);
  const std::string stem = file_stem(c.id) + "_" + harness::to_string(method);
  const fs::path dir = out_dir(g);
  if (model.baseline) transduce::save_model(*model.baseline, dir / (stem + ".model.json"));
  if (model.bilinear) {
    transduce::save_model(*model.bilinear, dir / (stem + ".model.json"));
    const auto bank = transduce::DeltaBank::build(data.xs(funcgen::Split::train), c.data.bank_cap,
                                                  harness::split_seed(c.seed, "bank"));
    transduce::write_bank_csv(bank, dir / (stem + ".bank.csv"));
  }
  if (model.omega) transduce::save_model(*model.omega, dir / (stem + ".omega.json"));
  std::cout << "method " << harness::to_string(method) << " final_loss " << harness::format_double(model.stats.final_loss)
            << '\n';
  for (const auto& w : model.stats.warnings) log(g, "warning: " + w);
  log(g, "wrote " + (dir / (stem + ".model.json")).string());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& method_name, const std::string& model_path,
             const std::string& omega_path, const std::string& data_path) {
  const auto c = load(g);
  require_regression(c);
  if (data_path.empty()) throw ValidationError("data", "--data is required");
  const auto data = funcgen::read_dataset_csv(data_path);
  harness::TrainedModel model;
  auto any = transduce::load_model(model_path);
  if (auto* b = std::get_if<transduce::BaselineModel>(&any)) {
    model.method = harness::method_from_string(std::string(transduce::to_string(b->kind)));
    model.baseline = std::move(*b);
  } else if (auto* p = std::get_if<transduce::BilinearPredictor>(&any)) {
    model.bilinear = std::move(*p);
    model.method = Method::bilinear_transduction;
    if (!omega_path.empty()) {
      auto w = transduce::load_model(omega_path);
      auto* omega = std::get_if<transduce::WeightingFunction>(&w);
      if (!omega) throw ValidationError("omega", omega_path + " is not a weighting function checkpoint");
      model.omega = std::move(*omega);
      model.method = Method::weighted_transduction;
    }
  } else {
    throw ValidationError("model", model_path + " holds a weighting function; pass it as --omega");
  }
  if (!method_name.empty() && harness::method_from_string(method_name) != model.method)
    throw ValidationError("method", "--method does not match the checkpoint");
  const nd::Matrix train_xs = data.xs(funcgen::Split::train);
  nd::Rng rng(harness::split_seed(c.seed, "eval/" + harness::to_string(model.method)));
  std::vector<harness::ResultRecord> records;
  for (auto split : {funcgen::Split::train, funcgen::Split::in_support, funcgen::Split::oos}) {
    if (data.count(split) == 0) continue;
    const auto pred = harness::predict_regression(c, model, train_xs, data.xs(split), rng);
    records.push_back({c.id, harness::to_string(model.method), c.seed, split, harness::Metric::mse,
                       nd::mse_loss(pred, data.ys(split)).value, data.count(split), c.hash});
  }
  const auto path = results_path(g, c.id + "_" + harness::to_string(model.method) + "_eval");
  harness::emit_results(records, path, format(g));
  std::cout << harness::format_results(records, format(g));
  log(g, "wrote " + path.string());
  return 0;
}

int cmd_matcomp(const Globals& g) {
  const auto c = load(g);
  if (c.kind != ExperimentKind::matcomp_bound && c.kind != ExperimentKind::coverage)
    throw ValidationError("kind", "matcomp needs a matcomp_bound or coverage config");
  const auto lines = harness::run_theory(c, progress(g));
  std::size_t holds = 0, pre = 0;
  for (const auto& l : lines) {
    holds += l.at("holds").get<bool>();
    pre += l.at("precondition_met").get<bool>();
  }
  const auto path = out_dir(g) / (file_stem(c.id) + ".jsonl");
  write_json_lines(path, lines);
  std::cout << c.id << ": holds " << holds << "/" << lines.size() << ", precondition met " << pre << "/"
            << lines.size() << '\n';
  log(g, "wrote " + path.string());
  return 0;
}

int cmd_imitate(const Globals& g) {
  const auto c = load(g);
  if (c.kind != ExperimentKind::imitation) throw ValidationError("kind", "imitate needs an imitation config");
  const auto rep = harness::replicate_seed(c, 0);
  const auto demos = imitate::collect_demos(c.imitation.env, c.imitation.n_demos, c.imitation.env.train_goals,
                                            harness::split_seed(rep, "demos"));
  imitate::write_demos_jsonl(demos, out_dir(g) / (file_stem(c.id) + "_r0_demos.jsonl"));
  const auto records = harness::run_experiment(c, progress(g));
  const auto path = results_path(g, c.id);
  harness::emit_results(records, path, format(g));
  std::cout << harness::format_results(records, format(g));
  log(g, "wrote " + path.string());
  return 0;
}

int cmd_sweep(const Globals& g) {
  const auto c = load(g);
  const auto result = harness::run_sweep({c}, progress(g));
  if (!result.failures.empty()) {
    std::vector<nlohmann::json> lines;
    for (const auto& f : result.failures)
      lines.push_back({{"experiment_id", f.experiment_id}, {"validation", f.validation}, {"message", f.message}});
    write_json_lines(out_dir(g) / (file_stem(c.id) + "_failures.jsonl"), lines);
  }
  if (result.records.empty()) {
    std::cerr << "[bitrans] every run failed (" << result.failures.size() << "/" << result.runs << ")\n";
    const bool all_validation = std::all_of(result.failures.begin(), result.failures.end(),
                                            [](const auto& f) { return f.validation; });
    return all_validation ? 1 : 2;
  }
  harness::emit_results(result.records, results_path(g, c.id), format(g));
  write_text(results_path(g, c.id + "_aggregate"), harness::format_aggregate(harness::aggregate(result.records), format(g)));
  std::cout << c.id << ": " << result.runs - result.failures.size() << "/" << result.runs << " runs ok, "
            << result.records.size() << " records\n";
  log(g, "wrote " + results_path(g, c.id).string());
  return 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ValidationError("results", "report needs at least one results file");
  std::vector<harness::ResultRecord> records;
  for (const auto& p : inputs) {
    auto r = harness::read_results(p);
    records.insert(records.end(), r.begin(), r.end());
  }
  if (records.empty()) throw ValidationError("results", "no records in the given files");
  const std::string text = harness::format_aggregate(harness::aggregate(records), format(g));
  write_text(results_path(g, "aggregate"), text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilinear transduction experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the master seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Results format")->check(CLI::IsMember({"csv", "jsonl"}))->capture_default_str();
  app.add_flag("-q,--quiet", g.quiet, "No progress on stderr");

  std::string method, data, model, omega;
  std::vector<std::string> inputs;
  auto* generate = app.add_subcommand("generate", "Write datasets (or demos) for each replicate");
  auto* train = app.add_subcommand("train", "Train one method and write its checkpoint");
  train->add_option("--method", method, "Method name");
  train->add_option("--data", data, "Dataset CSV (default: sample from config)");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--method", method, "Expected method");
  eval->add_option("--model", model, "Model checkpoint")->required();
  eval->add_option("--omega", omega, "Weighting function checkpoint (weighted transduction)");
  eval->add_option("--data", data, "Dataset CSV")->required();
  auto* matcomp = app.add_subcommand("matcomp", "Block completion bound or coverage report");
  auto* imitate_cmd = app.add_subcommand("imitate", "Collect demos and evaluate rollouts");
  auto* sweep = app.add_subcommand("sweep", "Run a grid (or a single config)");
  auto* report = app.add_subcommand("report", "Aggregate results files");
  report->add_option("results", inputs, "Results files (csv or jsonl)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return cmd_generate(g);
    if (*train) return cmd_train(g, method, data);
    if (*eval) return cmd_eval(g, method, model, omega, data);
    if (*matcomp) return cmd_matcomp(g);
    if (*imitate_cmd) return cmd_imitate(g);
    if (*sweep) return cmd_sweep(g);
    if (*report) return cmd_report(g, inputs);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.field() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
