#include "bitrans/matcomp/block.hpp"

#include <algorithm>
#include <string>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/linalg.hpp"

namespace bitrans::matcomp {
namespace {

constexpr int kBisectionSteps = 100;
constexpr int kMaxDoublings = 200;

double max_off_error(const BlockMatrix& a, const BlockMatrix& b) {
  return std::max({(a.m11 - b.m11).norm(), (a.m12 - b.m12).norm(), (a.m21 - b.m21).norm()});
}

}  // namespace

BlockMatrix BlockMatrix::from_full(const nd::Matrix& full, Eigen::Index n1, Eigen::Index m1) {
  BITRANS_EXPECT(n1 > 0 && m1 > 0 && n1 < full.rows() && m1 < full.cols(),
                 "BlockMatrix::from_full: split point must leave four nonempty blocks");
  const Eigen::Index n2 = full.rows() - n1, m2 = full.cols() - m1;
  return {full.topLeftCorner(n1, m1), full.topRightCorner(n1, m2), full.bottomLeftCorner(n2, m1),
          full.bottomRightCorner(n2, m2)};
}

nd::Matrix BlockMatrix::full() const {
  validate();
  nd::Matrix out(m11.rows() + m21.rows(), m11.cols() + m12.cols());
  out << m11, m12, m21, m22;
  return out;
}

void BlockMatrix::validate() const {
  BITRANS_EXPECT(m11.rows() == m12.rows() && m21.rows() == m22.rows() && m11.cols() == m21.cols() &&
                     m12.cols() == m22.cols(),
                 "BlockMatrix: inconsistent block shapes");
  BITRANS_EXPECT(m11.allFinite() && m12.allFinite() && m21.allFinite() && m22.allFinite(),
                 "BlockMatrix: non-finite entry");
}

nd::Matrix complete_block(const nd::Matrix& m11, const nd::Matrix& m12, const nd::Matrix& m21, double tol) {
  BITRANS_EXPECT(m11.rows() == m12.rows() && m11.cols() == m21.cols(), "complete_block: inconsistent shapes");
  return m21 * nd::pinv(m11, tol) * m12;
}

BoundReport bound_report(const BlockMatrix& star, const BlockMatrix& hat, std::size_t p) {
  star.validate();
  hat.validate();
  BITRANS_EXPECT(p >= 1 && p <= static_cast<std::size_t>(std::min(star.m11.rows(), star.m11.cols())),
                 "bound_report: p must not exceed the size of M11");
  BITRANS_EXPECT(star.m11.rows() == hat.m11.rows() && star.m11.cols() == hat.m11.cols() &&
                     star.m22.rows() == hat.m22.rows() && star.m22.cols() == hat.m22.cols(),
                 "bound_report: star and hat have different block shapes");
  BoundReport r;
  r.eps = max_off_error(star, hat);
  r.sigma_p = nd::svd_small(star.m11).s(static_cast<Eigen::Index>(p - 1));
  r.m_bound = std::max({star.m11.norm(), star.m12.norm(), star.m21.norm()});
  r.lhs = (complete_block(hat.m11, hat.m12, hat.m21) - star.m22).norm();
  r.rhs = r.sigma_p > 0.0 ? 8.0 * r.eps * r.m_bound * r.m_bound / (r.sigma_p * r.sigma_p)
                          : std::numeric_limits<double>::infinity();
  r.precondition_met = r.sigma_p > 0.0 && r.eps <= r.sigma_p / 2.0;
  r.holds = r.lhs <= r.rhs;
  return r;
}

LowRankFactors random_low_rank(Eigen::Index n, Eigen::Index m, std::size_t p, nd::Rng& rng) {
  BITRANS_EXPECT(n > 0 && m > 0 && p > 0, "random_low_rank: empty shape");
  const auto pp = static_cast<Eigen::Index>(p);
  LowRankFactors f{nd::Matrix(n, pp), nd::Matrix(m, pp)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < pp; ++k) f.a(i, k) = rng.normal();
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < pp; ++k) f.b(j, k) = rng.normal();
  return f;
}

std::vector<BoundReport> verify_perturbation_bound(const LowRankFactors& star, Eigen::Index n1, Eigen::Index m1,
                                                   double eps, std::size_t trials, std::uint64_t seed) {
  BITRANS_EXPECT(eps >= 0.0, "verify_perturbation_bound: eps must be nonnegative");
  const BlockMatrix m_star = BlockMatrix::from_full(star.product(), n1, m1);
  const std::size_t p = star.rank();
  std::vector<BoundReport> reports;
  reports.reserve(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    nd::Rng rng(nd::derive_seed(seed, "trial/" + std::to_string(k)));
    const LowRankFactors noise = random_low_rank(star.a.rows(), star.b.rows(), p, rng);
    auto estimate = [&](double t) {
      const nd::Matrix a = star.a + t * noise.a;
      const nd::Matrix b = star.b + t * noise.b;
      return BlockMatrix::from_full(a * b.transpose(), n1, m1);
    };
    double t = 0.0;
    if (eps > 0.0) {
      double lo = 0.0, hi = 1.0;
      int doublings = 0;
      while (max_off_error(m_star, estimate(hi)) < eps) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > kMaxDoublings) throw RuntimeFailure("verify_perturbation_bound: cannot reach eps");
      }
      for (int i = 0; i < kBisectionSteps; ++i) {
        const double mid = 0.5 * (lo + hi);
        (max_off_error(m_star, estimate(mid)) < eps ? lo : hi) = mid;
      }
      t = lo;  // error(lo) < eps, so every off-(2,2) block stays within eps
    }
    BoundReport r = bound_report(m_star, estimate(t), p);
    r.trial = k;
    reports.push_back(r);
  }
  return reports;
}

}  // namespace bitrans::matcomp
