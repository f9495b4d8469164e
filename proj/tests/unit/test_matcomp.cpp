#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bitrans/error.hpp"
#include "bitrans/matcomp/block.hpp"
#include "bitrans/matcomp/density.hpp"
#include "bitrans/matcomp/theory.hpp"
#include "bitrans/ndcore/linalg.hpp"

using namespace bitrans;
using namespace bitrans::matcomp;
using nd::Matrix;

TEST_CASE("block split and reassembly") {
  Matrix m(3, 4);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  const auto b = BlockMatrix::from_full(m, 1, 2);
  CHECK(b.m11.rows() == 1);
  CHECK(b.m11.cols() == 2);
  CHECK(b.m22(1, 1) == 12.0);
  CHECK((b.full().array() == m.array()).all());
}

TEST_CASE("Nystrom completion is exact for rank-p matrices") {
  for (std::size_t p = 1; p <= 4; ++p) {
    for (int t = 0; t < 10; ++t) {
      nd::Rng rng(100 * p + t);
      const auto f = random_low_rank(12, 10, p, rng);
      const auto b = BlockMatrix::from_full(f.product(), 6, 5);
      const Matrix m22 = complete_block(b.m11, b.m12, b.m21);
      CHECK((m22 - b.m22).norm() < 1e-8 * f.product().norm());
    }
  }
}

TEST_CASE("completion uses the pseudo-inverse, not an inverse") {
  // Rank-1 matrix with a singular 2x2 top-left block.
  Matrix u(4, 1), v(4, 1);
  u << 1, 2, 3, 4;
  v << 1, -1, 2, 0.5;
  const auto b = BlockMatrix::from_full(u * v.transpose(), 2, 2);
  CHECK((complete_block(b.m11, b.m12, b.m21) - b.m22).norm() < 1e-10);
}

TEST_CASE("perturbation bound holds and eps hits its target") {
  nd::Rng rng(3);
  const auto star = random_low_rank(16, 16, 3, rng);
  const auto b = BlockMatrix::from_full(star.product(), 8, 8);
  const double sigma = bound_report(b, b, 3).sigma_p;
  const auto reports = verify_perturbation_bound(star, 8, 8, 0.25 * sigma, 20, 7);
  for (const auto& r : reports) {
    CHECK(r.eps <= 0.25 * sigma);
    CHECK(r.eps == doctest::Approx(0.25 * sigma).epsilon(1e-9));
    CHECK(r.precondition_met);
    CHECK(r.holds);
    CHECK(r.rhs == doctest::Approx(8 * r.eps * r.m_bound * r.m_bound / (r.sigma_p * r.sigma_p)));
  }
}

TEST_CASE("density ratio equals the worst event ratio") {
  // Independent oracle: enumerate every nonempty event over 5 atoms.
  nd::Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    FiniteDist a, b;
    for (int i = 0; i < 5; ++i) {
      a.mass.push_back(rng.uniform());
      b.mass.push_back(rng.uniform() + 0.05);
    }
    const auto& an = a;
    const auto& bn = b;
    double worst = 0.0;
    for (int mask = 1; mask < 32; ++mask) {
      double pa = 0.0, pb = 0.0;
      for (int i = 0; i < 5; ++i)
        if (mask >> i & 1) {
          pa += an.mass[i];
          pb += bn.mass[i];
        }
      worst = std::max(worst, pa / pb);
    }
    CHECK(density_ratio(a, b).value() == doctest::Approx(worst).epsilon(1e-12));
  }
}

TEST_CASE("density ratio is infinite off the support") {
  const FiniteDist a{{0.5, 0.5}}, b{{1.0, 0.0}};
  CHECK(density_ratio(a, b).is_infinite());
  CHECK(density_ratio(b, a).value() == doctest::Approx(2.0));  // raw masses, no normalisation
  CHECK(max(Kappa::finite(2.0), Kappa::infinite()).is_infinite());
  CHECK(Kappa::infinite().to_string() == "inf");
}

TEST_CASE("axis binning") {
  const Axis ax{0.0, 1.0, 4};
  CHECK(ax.bin(0.0) == 0u);
  CHECK(ax.bin(0.26) == 1u);
  CHECK(ax.bin(1.0) == 3u);
  CHECK_THROWS_AS(ax.bin(1.5), ValidationError);
}

TEST_CASE("coverage of a product of uniform blocks") {
  // Two delta cells and two anchor cells; train on three blocks.
  PairGrid grid{{Axis{0.0, 2.0, 2}}, {Axis{0.0, 2.0, 2}}};
  CoverageFactors f{{{1, 0}}, {{0, 1}}, {{1, 0}}, {{0, 1}}};
  const FiniteDist train{{1, 1, 1, 0}}, test{{0, 0, 0, 1}};
  const auto r = combinatorial_coverage(grid, train, test, f);
  // The three off-(2,2) blocks carry total mass 3 against a normalised train set.
  CHECK(r.kappa_train.value() == doctest::Approx(3.0));
  CHECK(r.kappa_test.value() == doctest::Approx(1.0));
  CHECK(r.kappa.value() == doctest::Approx(3.0));
}

TEST_CASE("risk ratio arithmetic") {
  const auto r = risk_ratio_check(0.01, 0.5, Kappa::finite(3.0), 2.0, 1.0);
  CHECK(r.bound == doctest::Approx(0.01 * 9.0 * (1.0 + 64.0 * 16.0)));
  CHECK(r.precondition_met == (0.01 <= 1.0 / 12.0));
  CHECK(r.holds);
  const auto inf = risk_ratio_check(0.01, 0.5, Kappa::infinite(), 2.0, 1.0);
  CHECK(!inf.precondition_met);
  CHECK(std::isinf(inf.bound));
}

TEST_CASE("empirical sigma of orthogonal features") {
  Matrix f(2, 4), g(2, 4);
  f << 1, -1, 0, 0, 0, 0, 1, -1;
  g = 2.0 * f;
  // E f f^T = diag(0.5, 0.5); E g g^T = diag(2, 2).
  CHECK(empirical_sigma_p(f, g, 2) == doctest::Approx(0.5));
  CHECK(empirical_sigma_p(f, g, 2, SigmaForm::product) == doctest::Approx(1.0));
}

TEST_CASE("planted problem satisfies coverage with kappa 3 and exact risks for the truth") {
  PlantedConfig c;
  c.seed = 5;
  const auto p = make_planted(c);
  CHECK(p.coverage.kappa.value() == doctest::Approx(3.0));
  CHECK(p.sigma_sq > 0.0);
  const Matrix h = p.model.h(p.train.deltas, p.train.anchors);
  CHECK((h - p.train.targets).norm() == 0.0);
}
