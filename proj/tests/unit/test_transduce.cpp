#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/linalg.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/baselines.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/checkpoint.hpp"
#include "bitrans/transduce/delta_bank.hpp"
#include "bitrans/transduce/training.hpp"
#include "bitrans/transduce/weighted.hpp"

using namespace bitrans;
using namespace bitrans::transduce;
using nd::Matrix;
using nd::Vector;

namespace {

Matrix uniform_points(Eigen::Index d, Eigen::Index n, double lo, double hi, nd::Rng& rng) {
  Matrix m(d, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

double brute_bank_distance(const Matrix& deltas, const Vector& v) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < deltas.cols(); ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < v.size(); ++r) acc += (v(r) - deltas(r, c)) * (v(r) - deltas(r, c));
    best = std::min(best, acc);
  }
  return std::sqrt(best);
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.arch.hidden_layers = 1;
  c.arch.units = 16;
  c.arch.segment = 4;
  c.arch.fourier = false;
  c.batch = 16;
  c.steps = 50;
  c.adam.lr = 1e-3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("delta bank holds all pairwise differences and zero") {
  nd::Rng rng(1);
  const Matrix xs = uniform_points(2, 12, 0, 1, rng);
  const auto bank = DeltaBank::build(xs);
  CHECK(bank.contains(Vector::Zero(2)));
  for (Eigen::Index i = 0; i < xs.cols(); ++i)
    for (Eigen::Index j = 0; j < xs.cols(); ++j)
      if (i != j) CHECK(bank.contains(xs.col(i) - xs.col(j)));
  CHECK(bank.size() == 12u * 11u + 1u);
}

TEST_CASE("k-d tree distance matches brute force") {
  nd::Rng rng(2);
  for (Eigen::Index d : {1, 2, 3}) {
    const Matrix xs = uniform_points(d, 40, -1, 1, rng);
    const auto bank = DeltaBank::build(xs, 500, 3);
    CHECK(bank.size() <= 501u);
    for (int q = 0; q < 200; ++q) {
      const Vector v = uniform_points(d, 1, -3, 3, rng).col(0);
      CHECK(bank.distance(v) == brute_bank_distance(bank.deltas(), v));
    }
  }
}

TEST_CASE("delta bank CSV round trip") {
  nd::Rng rng(3);
  const auto bank = DeltaBank::build(uniform_points(2, 8, 0, 1, rng));
  const auto path = std::filesystem::temp_directory_path() / "bitrans_bank_test.csv";
  write_bank_csv(bank, path);
  const auto back = read_bank_csv(path);
  std::filesystem::remove(path);
  CHECK(back.size() == bank.size());
  CHECK((back.deltas().array() == bank.deltas().array()).all());
}

TEST_CASE("anchor selection matches a brute-force double loop") {
  nd::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix xs = uniform_points(1, 10, 0, 1, rng);
    const auto bank = DeltaBank::build(xs);
    const Vector x = uniform_points(1, 1, -1, 2, rng).col(0);
    std::vector<double> d;
    for (Eigen::Index i = 0; i < xs.cols(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index a = 0; a < xs.cols(); ++a)
        for (Eigen::Index b = 0; b < xs.cols(); ++b) {
          const double diff = a == b ? 0.0 : xs(0, a) - xs(0, b);
          best = std::min(best, std::abs(x(0) - xs(0, i) - diff));
        }
      d.push_back(best);
    }
    const double rho = *std::min_element(d.begin(), d.end());
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] <= rho) expect.push_back(i);
    CHECK(select_anchors(x, xs, bank, RhoPolicy::nearest()).indices == expect);
  }
}

TEST_CASE("percentile policy admits at least ceil(q n / 100) anchors") {
  const std::vector<double> d = {0.5, 0.1, 0.4, 0.2, 0.3, 0.9, 0.8, 0.7, 0.6, 1.0};
  const auto s = select_from_distances(d, RhoPolicy::percentile(30));
  CHECK(s.rho == doctest::Approx(0.3));
  CHECK(s.indices == std::vector<std::size_t>{1, 3, 4});
  CHECK_THROWS_AS(select_from_distances(d, RhoPolicy::fixed(0.05)), EmptyAnchorError);
  CHECK(select_from_distances(d, RhoPolicy::fixed(0.05, true)).indices == std::vector<std::size_t>{1});
}

TEST_CASE("bilinear forward is a segment-wise dot product") {
  nd::Rng rng(5);
  ArchConfig arch;
  arch.hidden_layers = 1;
  arch.units = 8;
  arch.segment = 3;
  const auto pred = make_bilinear(2, 2, arch, rng);
  const Vector dx = Vector::Random(2), xa = Vector::Random(2);
  const Vector f = pred.f_net.forward(Matrix(dx)).col(0), g = pred.g_net.forward(Matrix(xa)).col(0);
  const Vector y = bilinear_forward(pred, dx, xa);
  CHECK(y(0) == doctest::Approx(f.segment(0, 3).dot(g.segment(0, 3))));
  CHECK(y(1) == doctest::Approx(f.segment(3, 3).dot(g.segment(3, 3))));
}

TEST_CASE("prediction matrix over a grid has rank at most m") {
  nd::Rng rng(6);
  ArchConfig arch;
  arch.segment = 4;
  arch.units = 32;
  const auto pred = make_bilinear(1, 1, arch, rng);
  Matrix deltas(1, 30 * 30), anchors(1, 30 * 30);
  for (int a = 0; a < 30; ++a)
    for (int b = 0; b < 30; ++b) {
      deltas(0, a * 30 + b) = -1.0 + a / 15.0;
      anchors(0, a * 30 + b) = b / 10.0;
    }
  const Matrix flat = pred.predict(deltas, anchors);
  Matrix grid(30, 30);
  for (int a = 0; a < 30; ++a)
    for (int b = 0; b < 30; ++b) grid(a, b) = flat(0, a * 30 + b);
  const auto s = nd::svd_small(grid);
  CHECK(s.s(4) < 1e-8 * s.s(0));
}

TEST_CASE("training is deterministic in the seed") {
  nd::Rng rng(7);
  const Matrix xs = uniform_points(1, 30, 0, 1, rng);
  const Matrix ys = xs.array().sin().matrix();
  TrainStats a, b;
  const auto pa = train_bilinear(xs, ys, small_config(1), &a);
  const auto pb = train_bilinear(xs, ys, small_config(1), &b);
  CHECK(a.step_losses == b.step_losses);
  CHECK((pa.predict(xs, xs).array() == pb.predict(xs, xs).array()).all());
}

TEST_CASE("unit weights reproduce the unweighted loss exactly") {
  nd::Rng rng(8);
  const Matrix xs = uniform_points(1, 30, 0, 1, rng);
  const Matrix ys = (2.0 * xs.array()).cos().matrix();
  TrainStats plain, weighted;
  train_bilinear(xs, ys, small_config(3), &plain);
  WeightedConfig wc;
  wc.train = small_config(3);
  train_weighted(xs, ys, ConstantWeights(1.0), wc, &weighted);
  CHECK(plain.step_losses == weighted.step_losses);
}

TEST_CASE("trainer step with unit weights equals the unweighted step") {
  nd::Rng rng(9);
  ArchConfig arch;
  arch.units = 8;
  arch.segment = 2;
  const auto init = make_bilinear(1, 1, arch, rng);
  BilinearTrainer t1(init, {}), t2(init, {});
  const Matrix d = uniform_points(1, 8, -1, 1, rng), a = uniform_points(1, 8, 0, 1, rng), y = uniform_points(1, 8, 0, 1, rng);
  const Vector ones = Vector::Ones(8);
  CHECK(t1.step(d, a, y) == t2.step(d, a, y, &ones));
}

TEST_CASE("weighted argmax breaks ties toward the lowest index") {
  nd::Rng rng(10);
  const Matrix xs = uniform_points(1, 5, 0, 1, rng);
  CHECK(select_weighted_anchor(ConstantWeights(0.5), Vector::Constant(1, 0.3), xs) == 0u);
}

TEST_CASE("zero weights are reported as degenerate") {
  nd::Rng rng(11);
  const Matrix xs = uniform_points(1, 10, 0, 1, rng);
  WeightedConfig wc;
  wc.train = small_config(1);
  CHECK_THROWS_AS(train_weighted(xs, xs, ConstantWeights(0.0), wc), RuntimeFailure);
}

TEST_CASE("omega learns a separable labelling") {
  nd::Rng rng(12);
  std::vector<LabeledPair> pairs;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0, 1), q = rng.uniform(0, 1);
    pairs.push_back({Vector::Constant(1, a), Vector::Constant(1, q), q > a ? 1.0 : 0.0});
  }
  auto cfg = small_config(2);
  cfg.steps = 1500;
  cfg.adam.lr = 1e-2;
  const auto omega = train_weighting(pairs, cfg);
  std::size_t right = 0;
  for (const auto& p : pairs) right += (omega(p.query - p.anchor, p.anchor) > 0.5) == (p.label > 0.5);
  CHECK(right >= 180u);
}

TEST_CASE("linear baseline fits affine data") {
  nd::Rng rng(13);
  const Matrix xs = uniform_points(2, 64, -1, 1, rng);
  Matrix ys(1, 64);
  ys.row(0) = 2.0 * xs.row(0) - xs.row(1) + Eigen::RowVectorXd::Constant(64, 0.5);
  BaselineConfig cfg;
  cfg.train = small_config(1);
  cfg.train.steps = 3000;
  cfg.train.adam.lr = 1e-2;
  const auto model = train_baseline(BaselineKind::linear, xs, ys, cfg);
  CHECK(((model.predict(xs) - ys).array().square().mean()) < 1e-6);
}

TEST_CASE("deepsets needs a goal slice") {
  nd::Rng rng(14);
  const Matrix xs = uniform_points(4, 10, 0, 1, rng);
  BaselineConfig cfg;
  cfg.train = small_config(1);
  CHECK_THROWS_AS(train_baseline(BaselineKind::deepsets, xs, xs.topRows(2), cfg), ValidationError);
  cfg.goal = GoalSlice{2, 2};
  const auto m = train_baseline(BaselineKind::deepsets, xs, xs.topRows(2), cfg);
  CHECK(m.predict(xs).rows() == 2);
}

TEST_CASE("model checkpoints round trip and dispatch on role") {
  nd::Rng rng(15);
  ArchConfig arch;
  arch.units = 8;
  arch.segment = 2;
  const auto pred = make_bilinear(2, 2, arch, rng);
  const Matrix d = uniform_points(2, 5, -1, 1, rng), a = uniform_points(2, 5, 0, 1, rng);
  const auto back = predictor_from_json(predictor_to_json(pred));
  CHECK((back.predict(d, a).array() == pred.predict(d, a).array()).all());

  const auto dir = std::filesystem::temp_directory_path();
  save_model(WeightingFunction(make_bilinear(2, 1, arch, rng)), dir / "bitrans_omega_test.json");
  CHECK(std::holds_alternative<WeightingFunction>(load_model(dir / "bitrans_omega_test.json")));
  std::filesystem::remove(dir / "bitrans_omega_test.json");

  BaselineConfig cfg;
  cfg.train = small_config(1);
  cfg.goal = GoalSlice{1, 1};
  const Matrix xs = uniform_points(2, 10, 0, 1, rng);
  const auto model = train_baseline(BaselineKind::deepsets, xs, xs.topRows(1), cfg);
  save_model(model, dir / "bitrans_base_test.json");
  const auto loaded = load_model(dir / "bitrans_base_test.json");
  std::filesystem::remove(dir / "bitrans_base_test.json");
  REQUIRE(std::holds_alternative<BaselineModel>(loaded));
  CHECK((std::get<BaselineModel>(loaded).predict(xs).array() == model.predict(xs).array()).all());
}
