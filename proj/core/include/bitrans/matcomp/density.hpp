#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bitrans/ndcore/matrix.hpp"

namespace bitrans::matcomp {

/// Density-ratio bound; unbounded ratios are an explicit state rather than
/// a floating-point infinity.
class Kappa {
 public:
  static Kappa finite(double value);
  static Kappa infinite() { return Kappa(0.0, true); }

  bool is_infinite() const { return infinite_; }
  /// Throws ContractViolation when infinite.
  double value() const;
  /// "inf" or the value at 17 significant digits.
  std::string to_string() const;

  friend bool operator==(const Kappa&, const Kappa&) = default;

 private:
  Kappa(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

Kappa max(const Kappa& a, const Kappa& b);

/// Nonnegative masses over atoms 0..n-1; need not be normalised.
struct FiniteDist {
  std::vector<double> mass;

  double total() const;
  /// Copy scaled to total 1; an all-zero measure is returned unchanged.
  FiniteDist normalized() const;
  void validate() const;
};

/// Smallest kappa with mu1(A) <= kappa * mu2(A) for every event A, i.e. the
/// largest atom-wise ratio mu1(a) / mu2(a). Infinite if mu1 charges an atom
/// that mu2 does not.
Kappa density_ratio(const FiniteDist& mu1, const FiniteDist& mu2);

/// Uniform bins over [lo, hi); the last bin also takes x == hi.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 10;

  /// Throws ValidationError for points outside [lo, hi].
  std::size_t bin(double x) const;
};

/// Product grid over (dx, x'): delta axes first, then anchor axes.
struct PairGrid {
  std::vector<Axis> delta_axes;
  std::vector<Axis> anchor_axes;

  std::size_t delta_cells() const;
  std::size_t anchor_cells() const;
  std::size_t cells() const { return delta_cells() * anchor_cells(); }
  /// Row-major atom index: delta_cell * anchor_cells() + anchor_cell.
  std::size_t atom(const nd::Vector& delta, const nd::Vector& anchor) const;
  std::size_t delta_cell(const nd::Vector& delta) const;
  std::size_t anchor_cell(const nd::Vector& anchor) const;
};

/// Counts of (deltas.col(c), anchors.col(c)) over the grid.
FiniteDist pair_histogram(const PairGrid& grid, const nd::Matrix& deltas, const nd::Matrix& anchors);
/// Counts of points over the delta (anchor) sub-grid.
FiniteDist delta_histogram(const PairGrid& grid, const nd::Matrix& deltas);
FiniteDist anchor_histogram(const PairGrid& grid, const nd::Matrix& anchors);

/// Factor distributions D_{dX,i} over delta cells and D_{X,j} over anchor
/// cells, i, j in {1, 2}. A zero factor stands for an absent block.
struct CoverageFactors {
  FiniteDist delta1, delta2;
  FiniteDist anchor1, anchor2;
};

struct CoverageReport {
  Kappa kappa_train = Kappa::finite(0.0);  // sum_{(i,j) != (2,2)} D_{i x j}  vs  D_train
  Kappa kappa_test = Kappa::finite(0.0);   // D_test  vs  sum_{i,j} D_{i x j}
  Kappa kappa = Kappa::finite(0.0);        // max of the two
};

/// Both ratios of the combinatorial coverage condition. Every histogram and
/// factor is normalised first; D_{i x j} is the product of the factors.
/// Throws ValidationError when sizes disagree with the grid.
CoverageReport combinatorial_coverage(const PairGrid& grid, const FiniteDist& train, const FiniteDist& test,
                                      const CoverageFactors& factors);

}  // namespace bitrans::matcomp
