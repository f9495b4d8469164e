#include "bitrans/ndcore/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "bitrans/error.hpp"

namespace bitrans::nd {
namespace {

// Hestenes one-sided Jacobi on a tall (m >= n) matrix.
Svd jacobi_tall(const Matrix& a, const SvdOptions& options) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::Identity(n, n);

  bool converged = n < 2;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) throw RuntimeFailure("svd_small: Jacobi sweeps did not converge");

  Vector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  Svd out;
  out.u = Matrix::Zero(m, n);
  out.s = Vector::Zero(n);
  out.v = Matrix::Zero(n, n);
  const double s_max = n > 0 ? norms(order.front()) : 0.0;
  const double zero_cut =
      s_max * static_cast<double>(std::max(m, n)) * 10.0 * std::numeric_limits<double>::epsilon();

  std::vector<Eigen::Index> deficient;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    out.s(k) = norms(j);
    out.v.col(k) = v.col(j);
    if (norms(j) > zero_cut && norms(j) > 0.0) {
      out.u.col(k) = w.col(j) / norms(j);
    } else {
      deficient.push_back(k);
    }
  }

  // Complete U with an orthonormal basis of the orthogonal complement so
  // that U^T U = I also for rank-deficient input.
  Eigen::Index probe = 0;
  for (Eigen::Index k : deficient) {
    while (probe < m) {
      Vector e = Vector::Unit(m, probe++);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index c = 0; c < n; ++c)
          if (out.u.col(c).squaredNorm() > 0.0) e -= out.u.col(c).dot(e) * out.u.col(c);
      const double len = e.norm();
      if (len > 0.5) {
        out.u.col(k) = e / len;
        break;
      }
    }
  }
  return out;
}

}  // namespace

Svd svd_small(const Matrix& a, SvdOptions options) {
  BITRANS_EXPECT(a.allFinite(), "svd_small: non-finite input");
  BITRANS_EXPECT(a.rows() <= kMaxSvdDim && a.cols() <= kMaxSvdDim,
                 "svd_small: dimensions above 512 are out of range");
  if (a.rows() >= a.cols()) return jacobi_tall(a, options);
  Svd t = jacobi_tall(a.transpose(), options);
  std::swap(t.u, t.v);
  return t;
}

Matrix pinv(const Matrix& a, double tol) {
  const Svd d = svd_small(a);
  const double s_max = d.s.size() > 0 ? d.s(0) : 0.0;
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  for (Eigen::Index k = 0; k < d.s.size(); ++k) {
    if (d.s(k) > tol * s_max && d.s(k) > 0.0)
      out.noalias() += (1.0 / d.s(k)) * d.v.col(k) * d.u.col(k).transpose();
  }
  return out;
}

Eigen::Index numerical_rank(const Matrix& a, double rel_tol) {
  const Svd d = svd_small(a);
  if (d.s.size() == 0 || d.s(0) == 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < d.s.size(); ++k)
    if (d.s(k) > rel_tol * d.s(0)) ++r;
  return r;
}

}  // namespace bitrans::nd
