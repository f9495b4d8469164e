// Acceptance runner: one PASS/FAIL line per criterion. Tolerances are pinned
// below. Exits 0 unless --strict is given and a criterion fails, so honest
// failures are reported without breaking the test suite.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bitrans/error.hpp"
#include "bitrans/harness/config.hpp"
#include "bitrans/harness/experiment.hpp"
#include "bitrans/harness/results.hpp"
#include "bitrans/harness/seed.hpp"
#include "bitrans/ndcore/dense_net.hpp"
#include "bitrans/ndcore/linalg.hpp"
#include "bitrans/ndcore/rng.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/delta_bank.hpp"
#include "bitrans/transduce/training.hpp"

namespace fs = std::filesystem;
using namespace bitrans;
using harness::ResultRecord;
using nd::Matrix;
using nd::Vector;

namespace {

// Pinned tolerances.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradStep = 1e-6;
constexpr std::size_t kGradMaxChecked = 3000;  // parameters checked per net
constexpr double kNystromRelTol = 1e-8;
constexpr double kRankRelTol = 1e-8;
constexpr double kGapRatio = 0.1;          // bilinear OOS <= 0.1 x MLP OOS
constexpr double kTrainMseMax = 1e-2;
constexpr double kPolyFailRatio = 10.0;    // OOS >= 10 x train
constexpr double kWeightedRatio = 0.5;
constexpr double kReachDistMax = 0.05;
constexpr double kReachRatio = 0.25;
constexpr std::size_t kAnchorInstances = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path configs;
  fs::path out;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double median(std::vector<double> v) {
  BITRANS_EXPECT(!v.empty(), "median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Median over seeds of the records matching (id, method, split).
double seed_median(const std::vector<ResultRecord>& records, const std::string& id, const std::string& method,
                   funcgen::Split split) {
  std::vector<double> v;
  for (const auto& r : records)
    if (r.experiment_id == id && r.method == method && r.split == split) v.push_back(r.value);
  if (v.empty()) throw RuntimeFailure("no records for " + id + " " + method);
  return median(v);
}

harness::ExperimentConfig config(const Context& ctx, const std::string& name) {
  return harness::load_config(ctx.configs / (name + ".json"));
}

std::vector<ResultRecord> run_and_save(const Context& ctx, const harness::ExperimentConfig& c) {
  auto records = harness::run_experiment(c);
  harness::emit_results(records, ctx.out / (c.id + ".csv"), harness::Format::csv);
  return records;
}

std::vector<nlohmann::json> theory_and_save(const Context& ctx, const harness::ExperimentConfig& c) {
  auto lines = harness::run_theory(c);
  std::ofstream os(ctx.out / (c.id + ".jsonl"));
  for (const auto& l : lines) os << l.dump() << '\n';
  return lines;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, nd::Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Relu sign pattern of every hidden layer; a central difference is only
// valid when the pattern is identical at both probe points.
std::vector<bool> relu_pattern(const nd::DenseNet& net, const Matrix& x) {
  nd::ForwardCache cache;
  net.forward(x, cache);
  std::vector<bool> pattern;
  for (std::size_t l = 0; l + 1 < cache.pre_activations.size(); ++l) {
    const auto& z = cache.pre_activations[l];
    for (Eigen::Index k = 0; k < z.size(); ++k) pattern.push_back(z.data()[k] > 0.0);
  }
  return pattern;
}

Outcome gradient_check(const Context&) {
  nd::Rng rng(harness::split_seed(1, "acceptance/gradients"));
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t in = 1 + rng.index(3), out = 1 + rng.index(3);
    std::vector<std::size_t> hidden(rng.index(4));
    for (auto& h : hidden) h = 1 + rng.index(64);
    const bool fourier = t % 2 == 1;
    nd::DenseNet net = nd::DenseNet::mlp(in, hidden, out, fourier, rng, 1.0);
    const Matrix x = random_matrix(static_cast<Eigen::Index>(in), 4, rng);
    const Matrix probe = random_matrix(static_cast<Eigen::Index>(out), 4, rng);
    const auto loss = [&](const Matrix& xx) { return (net.forward(xx).array() * probe.array()).sum(); };

    nd::ForwardCache cache;
    net.forward(x, cache);
    nd::NetGrads grads = net.zero_grads();
    const Matrix gx = net.backward(cache, probe, grads);
    const auto analytic = std::as_const(grads).spans();
    auto params = net.parameters();
    const auto base = relu_pattern(net, x);

    std::vector<std::pair<std::size_t, std::size_t>> entries;
    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t k = 0; k < params[p].size(); ++k) entries.emplace_back(p, k);
    if (entries.size() > kGradMaxChecked) {
      for (std::size_t i = 0; i < kGradMaxChecked; ++i) std::swap(entries[i], entries[i + rng.index(entries.size() - i)]);
      entries.resize(kGradMaxChecked);
    }
    std::vector<double> a, n;
    for (auto [p, k] : entries) {
      const double saved = params[p][k];
      params[p][k] = saved + kGradStep;
      const double up = loss(x);
      const bool same_up = relu_pattern(net, x) == base;
      params[p][k] = saved - kGradStep;
      const double down = loss(x);
      const bool same_down = relu_pattern(net, x) == base;
      params[p][k] = saved;
      if (!same_up || !same_down) {
        ++skipped;
        continue;
      }
      a.push_back(analytic[p][k]);
      n.push_back((up - down) / (2 * kGradStep));
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Matrix xp = x, xm = x;
      xp.data()[i] += kGradStep;
      xm.data()[i] -= kGradStep;
      if (relu_pattern(net, xp) != base || relu_pattern(net, xm) != base) {
        ++skipped;
        continue;
      }
      a.push_back(gx.data()[i]);
      n.push_back((loss(xp) - loss(xm)) / (2 * kGradStep));
    }
    // Norm-wise relative error per net: max |a - fd| / max |fd|.
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - n[i]));
      scale = std::max(scale, std::abs(n[i]));
    }
    worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    checked += a.size();
  }
  return {worst < kGradRelTol, "max rel err " + fmt(worst) + " over " + std::to_string(checked) + " entries (" +
                                   std::to_string(skipped) + " skipped at relu kinks)"};
}

Outcome nystrom_exact(const Context& ctx) {
  const auto lines = theory_and_save(ctx, config(ctx, "nystrom_exact"));
  std::size_t ok = 0;
  double worst = 0.0;
  for (const auto& l : lines) {
    const double rel = l.at("lhs").get<double>() / l.at("m_norm").get<double>();
    worst = std::max(worst, rel);
    ok += rel < kNystromRelTol && l.at("eps").get<double>() == 0.0;
  }
  return {ok == lines.size() && lines.size() >= 100,
          std::to_string(ok) + "/" + std::to_string(lines.size()) + " trials, max rel " + fmt(worst)};
}

Outcome perturbation_bound(const Context& ctx) {
  const auto c = config(ctx, "perturbation_bound");
  const auto lines = theory_and_save(ctx, c);
  std::map<std::size_t, std::size_t> held, total;
  double worst = 0.0;
  for (const auto& l : lines) {
    const auto p = l.at("rank").get<std::size_t>();
    const double lhs = l.at("lhs").get<double>(), eps = l.at("eps").get<double>();
    const double m = l.at("m_bound").get<double>(), s = l.at("sigma_p").get<double>();
    // Recompute the right-hand side here rather than trusting "holds".
    const double rhs = 8.0 * eps * m * m / (s * s);
    held[p] += lhs <= rhs;
    ++total[p];
    worst = std::max(worst, lhs / rhs);
  }
  bool pass = !total.empty();
  std::string detail;
  for (const auto& [p, n] : total) {
    pass = pass && held[p] == n && n >= 100;
    detail += "p=" + std::to_string(p) + " " + std::to_string(held[p]) + "/" + std::to_string(n) + " ";
  }
  return {pass, detail + "max lhs/rhs " + fmt(worst)};
}

Outcome rank_invariant(const Context&) {
  nd::Rng rng(harness::split_seed(1, "acceptance/rank"));
  Matrix xs(1, 200), ys(1, 200);
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    xs(0, i) = rng.uniform(20.0, 40.0);
    ys(0, i) = std::sin(xs(0, i));
  }
  transduce::TrainConfig tc;
  tc.arch = {2, 64, 4, true, 1.0};
  tc.steps = 2000;
  tc.adam.lr = 1e-3;
  tc.seed = harness::split_seed(1, "acceptance/rank/train");
  const auto pred = transduce::train_bilinear(xs, ys, tc);
  constexpr Eigen::Index kGrid = 50;
  Matrix deltas(1, kGrid * kGrid), anchors(1, kGrid * kGrid);
  for (Eigen::Index a = 0; a < kGrid; ++a)
    for (Eigen::Index b = 0; b < kGrid; ++b) {
      deltas(0, a * kGrid + b) = -30.0 + 60.0 * static_cast<double>(a) / (kGrid - 1);
      anchors(0, a * kGrid + b) = 10.0 + 40.0 * static_cast<double>(b) / (kGrid - 1);
    }
  const Matrix flat = pred.predict(deltas, anchors);
  Matrix grid(kGrid, kGrid);
  for (Eigen::Index a = 0; a < kGrid; ++a)
    for (Eigen::Index b = 0; b < kGrid; ++b) grid(a, b) = flat(0, a * kGrid + b);
  const auto svd = nd::svd_small(grid);
  const double ratio = svd.s(4) / svd.s(0);
  return {ratio < kRankRelTol, "sigma5/sigma1 " + fmt(ratio) + ", sigma4/sigma1 " + fmt(svd.s(3) / svd.s(0))};
}

Outcome mlp_gap(const Context& ctx, const std::vector<std::string>& names, bool check_train) {
  bool pass = true;
  std::string detail;
  for (const auto& name : names) {
    const auto c = config(ctx, name);
    const auto records = run_and_save(ctx, c);
    const double bil = seed_median(records, c.id, "bilinear_transduction", funcgen::Split::oos);
    const double mlp = seed_median(records, c.id, "mlp", funcgen::Split::oos);
    bool ok = bil <= kGapRatio * mlp;
    detail += name + ": oos bilinear " + fmt(bil) + " mlp " + fmt(mlp);
    if (check_train) {
      const double tb = seed_median(records, c.id, "bilinear_transduction", funcgen::Split::train);
      const double tm = seed_median(records, c.id, "mlp", funcgen::Split::train);
      ok = ok && tb < kTrainMseMax && tm < kTrainMseMax;
      detail += ", train bilinear " + fmt(tb) + " mlp " + fmt(tm);
    }
    detail += ok ? " [ok]; " : " [fail]; ";
    pass = pass && ok;
  }
  return {pass, detail};
}

Outcome polynomial_control(const Context& ctx) {
  const auto c = config(ctx, "poly8_control");
  const auto records = run_and_save(ctx, c);
  const double oos = seed_median(records, c.id, "bilinear_transduction", funcgen::Split::oos);
  const double train = seed_median(records, c.id, "bilinear_transduction", funcgen::Split::train);
  return {oos >= kPolyFailRatio * train, "oos " + fmt(oos) + " train " + fmt(train)};
}

Outcome data_width(const Context& ctx) {
  const auto c = config(ctx, "growing_data_width");
  const auto records = run_and_save(ctx, c);
  const double one = seed_median(records, c.id + "/band1", "bilinear_transduction", funcgen::Split::oos);
  const double two = seed_median(records, c.id + "/band2", "bilinear_transduction", funcgen::Split::oos);
  return {one < two, "one width " + fmt(one) + ", two widths " + fmt(two)};
}

Outcome weighted(const Context& ctx) {
  const auto c = config(ctx, "tiled_weighted");
  const auto records = run_and_save(ctx, c);
  const double w = seed_median(records, c.id, "weighted_transduction", funcgen::Split::oos);
  const double b = seed_median(records, c.id, "bilinear_transduction", funcgen::Split::oos);
  return {w <= kWeightedRatio * b, "oos weighted " + fmt(w) + " unweighted " + fmt(b)};
}

Outcome planted(const Context& ctx) {
  const auto lines = theory_and_save(ctx, config(ctx, "planted_coverage"));
  std::size_t ok = 0, pre = 0;
  double worst = 0.0;
  for (const auto& l : lines) {
    const bool finite = l.at("bound").is_number() && l.at("kappa").is_number();
    if (!finite) continue;
    const double kappa = l.at("kappa").get<double>(), r_train = l.at("r_train").get<double>();
    const double r_test = l.at("r_test").get<double>(), m = l.at("m_bound").get<double>();
    const double s2 = l.at("sigma_sq").get<double>();
    const double bound = r_train * kappa * kappa * (1.0 + 64.0 * std::pow(m, 4) / (s2 * s2));
    const bool precondition = r_train <= s2 / (4.0 * kappa);
    pre += precondition;
    ok += precondition && r_test <= bound;
    worst = std::max(worst, r_test / bound);
  }
  return {ok == lines.size() && lines.size() >= 10,
          std::to_string(ok) + "/" + std::to_string(lines.size()) + " runs hold (" + std::to_string(pre) +
              " meet the precondition), max r_test/bound " + fmt(worst)};
}

// Independent anchor selection: brute-force bank distance and the rho rules
// written out directly.
std::set<std::size_t> brute_anchors(const Vector& x, const Matrix& train, const Matrix& bank,
                                    const transduce::RhoPolicy& policy, double& rho) {
  std::vector<double> d(static_cast<std::size_t>(train.cols()));
  for (Eigen::Index i = 0; i < train.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index b = 0; b < bank.cols(); ++b) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double diff = (x(k) - train(k, i)) - bank(k, b);
        s += diff * diff;
      }
      best = std::min(best, std::sqrt(s));
    }
    d[static_cast<std::size_t>(i)] = best;
  }
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  using Kind = transduce::RhoPolicy::Kind;
  if (policy.kind == Kind::nearest) {
    rho = sorted.front();
  } else if (policy.kind == Kind::percentile) {
    const auto rank = static_cast<std::size_t>(std::ceil(policy.q / 100.0 * static_cast<double>(d.size())));
    rho = sorted[std::max<std::size_t>(rank, 1) - 1];
  } else {
    rho = policy.rho;
  }
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] <= rho) out.insert(i);
  return out;
}

Outcome anchor_oracle(const Context&) {
  nd::Rng rng(harness::split_seed(1, "acceptance/anchors"));
  std::size_t agree = 0;
  for (std::size_t t = 0; t < kAnchorInstances; ++t) {
    const auto dim = static_cast<Eigen::Index>(1 + rng.index(3));
    const auto n = static_cast<Eigen::Index>(2 + rng.index(40));
    Matrix train(dim, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < dim; ++k) train(k, j) = rng.uniform(0.0, 10.0);
    const std::size_t cap = rng.index(2) ? transduce::kDefaultBankCap : 1 + rng.index(200);
    const auto bank = transduce::DeltaBank::build(train, cap, rng.next_u64());
    Vector x(dim);
    for (Eigen::Index k = 0; k < dim; ++k) x(k) = rng.uniform(-10.0, 25.0);
    transduce::RhoPolicy policy;
    switch (rng.index(3)) {
      case 0: policy = transduce::RhoPolicy::nearest(); break;
      case 1: policy = transduce::RhoPolicy::percentile(1.0 + 99.0 * rng.uniform()); break;
      default: policy = transduce::RhoPolicy::fixed(rng.uniform(0.0, 8.0)); break;
    }
    double rho = 0.0;
    const auto expected = brute_anchors(x, train, bank.deltas(), policy, rho);
    bool same = false;
    try {
      const auto got = transduce::select_anchors(x, train, bank, policy);
      same = std::set<std::size_t>(got.indices.begin(), got.indices.end()) == expected && !expected.empty();
    } catch (const transduce::EmptyAnchorError&) {
      same = expected.empty();
    }
    agree += same;
  }
  return {agree == kAnchorInstances, std::to_string(agree) + "/" + std::to_string(kAnchorInstances) + " instances agree"};
}

Outcome imitation(const Context& ctx) {
  const auto c = config(ctx, "reach_oos");
  const auto records = run_and_save(ctx, c);
  const double b = seed_median(records, c.id, "bilinear_transduction", funcgen::Split::oos);
  const double m = seed_median(records, c.id, "mlp", funcgen::Split::oos);
  return {b < kReachDistMax && b < kReachRatio * m, "median final dist bilinear " + fmt(b) + " mlp " + fmt(m)};
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism(const Context& ctx) {
  bool pass = true;
  std::string detail;
  for (const std::string name : {"poly8_control", "nystrom_exact"}) {
    const auto c = config(ctx, name);
    std::vector<std::string> bytes;
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = ctx.out / ("determinism_" + std::to_string(run));
      fs::create_directories(dir);
      const Context sub{ctx.configs, dir};
      if (c.kind == harness::ExperimentKind::matcomp_bound) {
        theory_and_save(sub, c);
        bytes.push_back(read_file(dir / (c.id + ".jsonl")));
      } else {
        run_and_save(sub, c);
        bytes.push_back(read_file(dir / (c.id + ".csv")));
      }
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    detail += name + (same ? " identical; " : " differs; ");
    pass = pass && same;
  }
  return {pass, detail};
}

struct Criterion {
  int number;
  std::string name;
  double budget_s;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bitrans acceptance criteria"};
  Context ctx{BITRANS_CONFIG_DIR, "acceptance_out"};
  std::vector<int> only;
  bool strict = false;
  app.add_option("--configs", ctx.configs, "Directory of acceptance configs");
  app.add_option("--out", ctx.out, "Directory for results files");
  app.add_option("--only", only, "Run only these criterion numbers");
  app.add_flag("--strict", strict, "Exit 1 if any criterion fails");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(ctx.out);

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 10, gradient_check},
      {2, "nystrom exactness", 5, nystrom_exact},
      {3, "perturbation bound", 10, perturbation_bound},
      {4, "bilinear rank invariant", 60, rank_invariant},
      {5, "mixed periodic and sawtooth gap", 600,
       [](const Context& c) { return mlp_gap(c, {"mixed_periodic_gap", "sawtooth_gap"}, true); }},
      {6, "polynomial negative control", 300, polynomial_control},
      {7, "data-width effect", 300, data_width},
      {8, "equivariant and growing mixtures gap", 600,
       [](const Context& c) { return mlp_gap(c, {"equivariant_gap", "growing_gap"}, false); }},
      {9, "weighted transduction", 600, weighted},
      {10, "planted coverage bound", 300, planted},
      {11, "anchor selection oracle", 5, anchor_oracle},
      {12, "imitation oos goals", 600, imitation},
      {13, "determinism", 0, determinism},
  };

  std::ofstream summary(fs::path(ctx.out) / "summary.txt");
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool in_budget = c.budget_s <= 0 || elapsed < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    char line[1024];
    std::snprintf(line, sizeof line, "[%s] %2d %s: %s; %.1f s%s\n", pass ? "PASS" : "FAIL", c.number, c.name.c_str(),
                  o.detail.c_str(), elapsed, in_budget ? "" : (" over budget " + fmt(c.budget_s) + " s").c_str());
    std::fputs(line, stdout);
    std::fflush(stdout);
    summary << line << std::flush;
  }
  std::printf("%d criteria failed\n", failed);
  summary << failed << " criteria failed\n";
  return strict && failed > 0 ? 1 : 0;
}
