#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::matcomp {

/// [[M11, M12], [M21, M22]] with M_ij of shape n_i x m_j.
struct BlockMatrix {
  nd::Matrix m11, m12, m21, m22;

  /// Splits `full` after row n1 and column m1.
  static BlockMatrix from_full(const nd::Matrix& full, Eigen::Index n1, Eigen::Index m1);
  nd::Matrix full() const;
  /// Throws ContractViolation on inconsistent shapes or non-finite entries.
  void validate() const;
};

/// M21 pinv(M11, tol) M12.
nd::Matrix complete_block(const nd::Matrix& m11, const nd::Matrix& m12, const nd::Matrix& m21, double tol = 1e-10);

/// Perturbation bound  ||M^22 - M*22||_F <= 8 eps M^2 / sigma_p(M*11)^2.
struct BoundReport {
  std::size_t trial = 0;
  double eps = 0.0;      // max_{(i,j) != (2,2)} ||M^ij - M*ij||_F
  double sigma_p = 0.0;  // sigma_p(M*11)
  double m_bound = 0.0;  // max_{(i,j) != (2,2)} ||M*ij||_F
  double lhs = 0.0;      // ||complete_block(M^) - M*22||_F
  double rhs = 0.0;
  bool holds = false;             // lhs <= rhs
  bool precondition_met = false;  // eps <= sigma_p / 2
};

/// Measures the bound for an estimate `hat` of `star`; M^22 is recomputed
/// from hat's other blocks by complete_block.
BoundReport bound_report(const BlockMatrix& star, const BlockMatrix& hat, std::size_t p);

/// M = A B^T with A: n x p, B: m x p.
struct LowRankFactors {
  nd::Matrix a;
  nd::Matrix b;

  nd::Matrix product() const { return a * b.transpose(); }
  std::size_t rank() const { return static_cast<std::size_t>(a.cols()); }
};

/// Standard normal factors.
LowRankFactors random_low_rank(Eigen::Index n, Eigen::Index m, std::size_t p, nd::Rng& rng);

/// Each trial perturbs the factors (A + t E_A)(B + t E_B)^T, so the
/// estimate keeps rank <= p, with t bisected until the largest
/// off-(2,2) block error equals eps. Trial k uses the seed
/// derive_seed(seed, "trial/<k>").
std::vector<BoundReport> verify_perturbation_bound(const LowRankFactors& star, Eigen::Index n1, Eigen::Index m1,
                                                   double eps, std::size_t trials, std::uint64_t seed);

}  // namespace bitrans::matcomp
