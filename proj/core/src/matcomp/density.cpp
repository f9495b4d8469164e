#include "bitrans/matcomp/density.hpp"

#include <cmath>
#include <cstdio>

#include "bitrans/error.hpp"

namespace bitrans::matcomp {
namespace {

std::size_t cells_of(const std::vector<Axis>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.bins;
  return n;
}

std::size_t cell_of(const std::vector<Axis>& axes, const nd::Vector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != axes.size())
    throw ValidationError("grid", std::string(what) + " dimension does not match the grid");
  std::size_t idx = 0;
  for (std::size_t d = 0; d < axes.size(); ++d) idx = idx * axes[d].bins + axes[d].bin(v(static_cast<Eigen::Index>(d)));
  return idx;
}

void expect_size(const FiniteDist& d, std::size_t n, const char* field) {
  d.validate();
  if (d.mass.size() != n) throw ValidationError(field, "histogram size does not match the grid");
}

}  // namespace

Kappa Kappa::finite(double value) {
  BITRANS_EXPECT(std::isfinite(value) && value >= 0.0, "Kappa::finite: value must be finite and nonnegative");
  return Kappa(value, false);
}

double Kappa::value() const {
  BITRANS_EXPECT(!infinite_, "Kappa::value: ratio is unbounded");
  return value_;
}

std::string Kappa::to_string() const {
  if (infinite_) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

Kappa max(const Kappa& a, const Kappa& b) {
  if (a.is_infinite()) return a;
  if (b.is_infinite()) return b;
  return a.value() >= b.value() ? a : b;
}

double FiniteDist::total() const {
  double t = 0.0;
  for (double m : mass) t += m;
  return t;
}

FiniteDist FiniteDist::normalized() const {
  const double t = total();
  FiniteDist out = *this;
  if (t > 0.0)
    for (double& m : out.mass) m /= t;
  return out;
}

void FiniteDist::validate() const {
  for (double m : mass)
    if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("dist.mass", "masses must be finite and >= 0");
}

Kappa density_ratio(const FiniteDist& mu1, const FiniteDist& mu2) {
  mu1.validate();
  mu2.validate();
  BITRANS_EXPECT(mu1.mass.size() == mu2.mass.size(), "density_ratio: supports differ");
  double k = 0.0;
  for (std::size_t a = 0; a < mu1.mass.size(); ++a) {
    if (mu1.mass[a] == 0.0) continue;
    if (mu2.mass[a] == 0.0) return Kappa::infinite();
    k = std::max(k, mu1.mass[a] / mu2.mass[a]);
  }
  return Kappa::finite(k);
}

std::size_t Axis::bin(double x) const {
  if (!(x >= lo && x <= hi)) throw ValidationError("grid", "point " + std::to_string(x) + " lies outside the grid");
  const auto b = static_cast<std::size_t>(std::floor((x - lo) / (hi - lo) * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

std::size_t PairGrid::delta_cells() const { return cells_of(delta_axes); }
std::size_t PairGrid::anchor_cells() const { return cells_of(anchor_axes); }

std::size_t PairGrid::delta_cell(const nd::Vector& delta) const { return cell_of(delta_axes, delta, "delta"); }
std::size_t PairGrid::anchor_cell(const nd::Vector& anchor) const { return cell_of(anchor_axes, anchor, "anchor"); }

std::size_t PairGrid::atom(const nd::Vector& delta, const nd::Vector& anchor) const {
  return delta_cell(delta) * anchor_cells() + anchor_cell(anchor);
}

FiniteDist pair_histogram(const PairGrid& grid, const nd::Matrix& deltas, const nd::Matrix& anchors) {
  BITRANS_EXPECT(deltas.cols() == anchors.cols(), "pair_histogram: column count mismatch");
  FiniteDist h{std::vector<double>(grid.cells(), 0.0)};
  for (Eigen::Index c = 0; c < deltas.cols(); ++c) h.mass[grid.atom(deltas.col(c), anchors.col(c))] += 1.0;
  return h;
}

FiniteDist delta_histogram(const PairGrid& grid, const nd::Matrix& deltas) {
  FiniteDist h{std::vector<double>(grid.delta_cells(), 0.0)};
  for (Eigen::Index c = 0; c < deltas.cols(); ++c) h.mass[grid.delta_cell(deltas.col(c))] += 1.0;
  return h;
}

FiniteDist anchor_histogram(const PairGrid& grid, const nd::Matrix& anchors) {
  FiniteDist h{std::vector<double>(grid.anchor_cells(), 0.0)};
  for (Eigen::Index c = 0; c < anchors.cols(); ++c) h.mass[grid.anchor_cell(anchors.col(c))] += 1.0;
  return h;
}

CoverageReport combinatorial_coverage(const PairGrid& grid, const FiniteDist& train, const FiniteDist& test,
                                      const CoverageFactors& factors) {
  const std::size_t nd_cells = grid.delta_cells(), na_cells = grid.anchor_cells();
  if (nd_cells == 0 || na_cells == 0) throw ValidationError("grid", "grid has no cells");
  expect_size(train, grid.cells(), "coverage.train");
  expect_size(test, grid.cells(), "coverage.test");
  expect_size(factors.delta1, nd_cells, "coverage.delta1");
  expect_size(factors.delta2, nd_cells, "coverage.delta2");
  expect_size(factors.anchor1, na_cells, "coverage.anchor1");
  expect_size(factors.anchor2, na_cells, "coverage.anchor2");

  const FiniteDist f1 = factors.delta1.normalized(), f2 = factors.delta2.normalized();
  const FiniteDist g1 = factors.anchor1.normalized(), g2 = factors.anchor2.normalized();
  FiniteDist off22{std::vector<double>(grid.cells())}, all{std::vector<double>(grid.cells())};
  for (std::size_t a = 0; a < nd_cells; ++a) {
    for (std::size_t b = 0; b < na_cells; ++b) {
      const double without = f1.mass[a] * g1.mass[b] + f1.mass[a] * g2.mass[b] + f2.mass[a] * g1.mass[b];
      off22.mass[a * na_cells + b] = without;
      all.mass[a * na_cells + b] = without + f2.mass[a] * g2.mass[b];
    }
  }
  CoverageReport r;
  r.kappa_train = density_ratio(off22, train.normalized());
  r.kappa_test = density_ratio(test.normalized(), all);
  r.kappa = max(r.kappa_train, r.kappa_test);
  return r;
}

}  // namespace bitrans::matcomp
