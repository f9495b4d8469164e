#pragma once

#include "bitrans/ndcore/matrix.hpp"

namespace bitrans::nd {

struct Svd {
  Matrix u;  // m x k, orthonormal columns
  Vector s;  // k, descending, nonnegative
  Matrix v;  // n x k, orthonormal columns
};

struct SvdOptions {
  int max_sweeps = 100;
  double tolerance = 1e-12;
};

inline constexpr Eigen::Index kMaxSvdDim = 512;

/// Thin SVD (k = min(m, n)) by one-sided Jacobi rotations.
/// Throws RuntimeFailure if the sweep cap is hit before convergence.
Svd svd_small(const Matrix& a, SvdOptions options = {});

/// Moore-Penrose pseudoinverse; singular values below tol * s_max are dropped.
Matrix pinv(const Matrix& a, double tol = 1e-10);

/// Number of singular values above rel_tol * s_max.
Eigen::Index numerical_rank(const Matrix& a, double rel_tol = 1e-10);

}  // namespace bitrans::nd
