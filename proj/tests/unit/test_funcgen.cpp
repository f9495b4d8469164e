#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bitrans/error.hpp"
#include "bitrans/funcgen/dataset.hpp"
#include "bitrans/funcgen/functions.hpp"

using namespace bitrans;
using namespace bitrans::funcgen;

TEST_CASE("sawtooth branches") {
  CHECK(eval_sawtooth(1.5, 2.0, 3.0) == doctest::Approx(1.0));
  CHECK(eval_sawtooth(4.0, 2.0, 3.0) == doctest::Approx(4.0 / 3.0));
  CHECK(eval_sawtooth(-1.0, 2.0, 3.0) == doctest::Approx(2.0 / 3.0));
  CHECK(eval_sawtooth(0.0, 2.0, 3.0) == 0.0);
}

TEST_CASE("analytic functions at frozen points") {
  CHECK(eval_growing_mixture(3.5) == doctest::Approx(-0.9589242746631385));
  CHECK(eval_growing_mixture(8.5) == doctest::Approx(1.4119577782212605));
  CHECK(eval_equivariant_mixture(7.5) == doctest::Approx(5.9559788891106304));
  CHECK(eval_mixed_periodic(22.0) == doctest::Approx(-1.917848549326277));
  CHECK(eval_mixed_periodic(30.5) == doctest::Approx(1.7954164323118698));
  CHECK(eval_mixed_periodic(43.0) == doctest::Approx(1.823915556442521));
  CHECK(eval_poly8(0.3) == doctest::Approx(-0.0805896));
}

TEST_CASE("poly8 vanishes at its roots") {
  for (double r : {0.1, -0.4, -0.7, 0.5, 1.5, -1.75, -1.0, 1.2}) CHECK(std::abs(eval_poly8(r)) < 1e-12);
}

TEST_CASE("equivariant mixture shifts by 3 per period") {
  for (double x : {0.2, 1.3, 2.7, 10.1, 25.9}) CHECK(eval_equivariant_mixture(x + 3.0) == doctest::Approx(eval_equivariant_mixture(x) + 3.0));
}

TEST_CASE("tiled2d sign rules on every grid point") {
  const Tiled2D t(17);
  for (int i = 0; i < Tiled2D::kGrid; ++i) {
    for (int j = 0; j < Tiled2D::kGrid; ++j) {
      const auto e = t.entry(i, j);
      for (int a = -1; a <= 2; ++a) {
        for (int b = -1; b <= 2; ++b) {
          const double x1 = Tiled2D::kLo + Tiled2D::kSpacing * i + Tiled2D::kShift * a;
          const double x2 = Tiled2D::kLo + Tiled2D::kSpacing * j + Tiled2D::kShift * b;
          const auto y = t.eval(x1, x2);
          CHECK(y[0] == e[0] * (b % 2 ? -1.0 : 1.0));
          CHECK(y[1] == e[1] * (a % 2 ? -1.0 : 1.0));
        }
      }
    }
  }
  CHECK_THROWS_AS(t.eval(5.5, 2.0), ContractViolation);
  CHECK(Tiled2D(17).entry(3, 4) == t.entry(3, 4));
}

TEST_CASE("sample_dataset respects ranges and counts") {
  FunctionId id;
  id.kind = FunctionKind::mixed_periodic;
  const RangeSpec ranges{{{{20, 40}}}, {{{10, 20}}, {{40, 50}}}};
  const auto ds = sample_dataset(id, ranges, 500, 200, 0.0, 3);
  CHECK(ds.count(Split::train) == 500);
  CHECK(ds.count(Split::in_support) == 200);
  CHECK(ds.count(Split::oos) == 200);
  for (const auto& s : ds.samples) {
    if (s.split == Split::oos) CHECK(((s.x(0) >= 10 && s.x(0) < 20) || (s.x(0) >= 40 && s.x(0) < 50)));
    else CHECK((s.x(0) >= 20 && s.x(0) < 40));
    CHECK(s.y(0) == eval_mixed_periodic(s.x(0)));
  }
}

TEST_CASE("noise applies to train labels only") {
  FunctionId id;
  id.kind = FunctionKind::poly8;
  const RangeSpec ranges{{{{-1, 1}}}, {{{1, 1.6}}}};
  const auto ds = sample_dataset(id, ranges, 50, 20, 0.1, 4);
  bool noisy = false;
  for (const auto& s : ds.samples) {
    if (s.split == Split::train) noisy |= s.y(0) != eval_poly8(s.x(0));
    else CHECK(s.y(0) == eval_poly8(s.x(0)));
  }
  CHECK(noisy);
}

TEST_CASE("datasets are deterministic in the seed") {
  FunctionId id;
  const RangeSpec ranges{{{{20, 40}}}, {{{40, 50}}}};
  const auto a = sample_dataset(id, ranges, 30, 10, 0.0, 9);
  const auto b = sample_dataset(id, ranges, 30, 10, 0.0, 9);
  const auto c = sample_dataset(id, ranges, 30, 10, 0.0, 10);
  CHECK((a.xs(Split::train).array() == b.xs(Split::train).array()).all());
  CHECK((a.xs(Split::train).array() != c.xs(Split::train).array()).any());
}

TEST_CASE("dataset CSV round trip is exact") {
  FunctionId id;
  id.kind = FunctionKind::tiled2d;
  id.tile_seed = 5;
  const RangeSpec ranges{{{{1, 5}, {1, 5}}}, {{{7, 11}, {7, 11}}}};
  const auto ds = sample_dataset(id, ranges, 40, 10, 0.0, 2);
  const auto path = std::filesystem::temp_directory_path() / "bitrans_ds_test.csv";
  write_dataset_csv(ds, path);
  const auto back = read_dataset_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].split == ds.samples[i].split);
    CHECK((back.samples[i].x.array() == ds.samples[i].x.array()).all());
    CHECK((back.samples[i].y.array() == ds.samples[i].y.array()).all());
  }
}

TEST_CASE("empty ranges are rejected") {
  FunctionId id;
  CHECK_THROWS(sample_dataset(id, RangeSpec{}, 10, 10, 0.0, 1));
}
