#include <benchmark/benchmark.h>

#include "bitrans/ndcore/linalg.hpp"
#include "bitrans/ndcore/rng.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/delta_bank.hpp"
#include "bitrans/transduce/training.hpp"

using namespace bitrans;
using nd::Matrix;

namespace {

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double lo, double hi, nd::Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

transduce::ArchConfig desk_arch() { return {2, 128, 32, true, 4.0}; }

void BM_BankBuild(benchmark::State& state) {
  nd::Rng rng(1);
  const Matrix xs = uniform(1, state.range(0), 20, 40, rng);
  for (auto _ : state) benchmark::DoNotOptimize(transduce::DeltaBank::build(xs, transduce::kDefaultBankCap, 2));
}
BENCHMARK(BM_BankBuild)->Arg(100)->Arg(500);

void BM_BankQuery(benchmark::State& state) {
  nd::Rng rng(1);
  const Matrix xs = uniform(state.range(0), 500, 0, 10, rng);
  const auto bank = transduce::DeltaBank::build(xs, transduce::kDefaultBankCap, 2);
  const Matrix qs = uniform(state.range(0), 256, -15, 15, rng);
  Eigen::Index k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bank.distance(qs.col(k)));
    k = (k + 1) % qs.cols();
  }
}
BENCHMARK(BM_BankQuery)->Arg(1)->Arg(2);

void BM_SelectAnchors(benchmark::State& state) {
  nd::Rng rng(1);
  const Matrix xs = uniform(1, 500, 20, 40, rng);
  const auto bank = transduce::DeltaBank::build(xs, transduce::kDefaultBankCap, 2);
  const nd::Vector x = nd::Vector::Constant(1, 45.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(transduce::select_anchors(x, xs, bank, transduce::RhoPolicy::nearest()));
}
BENCHMARK(BM_SelectAnchors);

void BM_BilinearForward(benchmark::State& state) {
  nd::Rng rng(1);
  const auto pred = transduce::make_bilinear(1, 1, desk_arch(), rng);
  const Matrix d = uniform(1, state.range(0), -20, 20, rng), a = uniform(1, state.range(0), 20, 40, rng);
  for (auto _ : state) benchmark::DoNotOptimize(pred.predict(d, a));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BilinearForward)->Arg(32)->Arg(256);

void BM_BilinearTrainStep(benchmark::State& state) {
  nd::Rng rng(1);
  transduce::BilinearTrainer trainer(transduce::make_bilinear(1, 1, desk_arch(), rng), {});
  const Matrix xs = uniform(1, 500, 20, 40, rng);
  const Matrix ys = xs.array().sin().matrix();
  for (auto _ : state) {
    const auto batch = transduce::sample_pairs(xs, ys, static_cast<std::size_t>(state.range(0)), rng);
    benchmark::DoNotOptimize(trainer.step(batch.deltas, batch.anchors, batch.targets));
  }
}
BENCHMARK(BM_BilinearTrainStep)->Arg(32)->Arg(128);

void BM_SvdSmall(benchmark::State& state) {
  nd::Rng rng(1);
  const Matrix a = uniform(state.range(0), state.range(0), -1, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nd::svd_small(a));
}
BENCHMARK(BM_SvdSmall)->Arg(16)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
