#pragma once

#include <string>
#include <vector>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/transduce/delta_bank.hpp"

namespace bitrans::transduce {

/// How the admissible radius rho is chosen for a query.
struct RhoPolicy {
  enum class Kind { fixed, nearest, percentile };

  Kind kind = Kind::nearest;
  double rho = 0.0;   // fixed: radius, >= 0
  double q = 10.0;    // percentile: in (0, 100]
  /// fixed only: fall back to the nearest policy instead of throwing when
  /// no anchor qualifies.
  bool fallback_to_nearest = false;

  static RhoPolicy fixed(double rho, bool fallback = false) { return {Kind::fixed, rho, 10.0, fallback}; }
  static RhoPolicy nearest() { return {Kind::nearest, 0.0, 10.0, false}; }
  static RhoPolicy percentile(double q) { return {Kind::percentile, 0.0, q, false}; }

  void validate() const;
};

std::string to_string(const RhoPolicy& policy);

/// No training point is admissible for a query under a fixed radius.
class EmptyAnchorError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

struct AnchorSet {
  std::vector<std::size_t> indices;  // ascending
  double rho = 0.0;                  // radius actually used
};

/// Per-anchor bank distances d_i = bank_distance(bank, x_test - x_i).
std::vector<double> anchor_distances(const nd::Vector& x_test, const nd::Matrix& train_xs,
                                     const DeltaBank& bank);

/// I(x_test) = { i : d_i <= rho }. Under `nearest`, rho = min_i d_i; under
/// `percentile(q)`, rho is the nearest-rank q-th percentile of {d_i}, so at
/// least ceil(q n / 100) anchors qualify.
AnchorSet select_anchors(const nd::Vector& x_test, const nd::Matrix& train_xs, const DeltaBank& bank,
                         const RhoPolicy& policy);

/// Same selection from precomputed distances.
AnchorSet select_from_distances(const std::vector<double>& distances, const RhoPolicy& policy);

}  // namespace bitrans::transduce
