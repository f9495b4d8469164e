#include "bitrans/transduce/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bitrans::transduce {

void RhoPolicy::validate() const {
  switch (kind) {
    case Kind::fixed:
      if (!(rho >= 0.0)) throw ValidationError("rho.rho", "fixed radius must be >= 0");
      break;
    case Kind::percentile:
      if (!(q > 0.0 && q <= 100.0)) throw ValidationError("rho.q", "percentile must be in (0, 100]");
      break;
    case Kind::nearest: break;
  }
}

std::string to_string(const RhoPolicy& policy) {
  char buf[64];
  switch (policy.kind) {
    case RhoPolicy::Kind::fixed: std::snprintf(buf, sizeof buf, "fixed(%g)", policy.rho); return buf;
    case RhoPolicy::Kind::nearest: return "nearest";
    case RhoPolicy::Kind::percentile: std::snprintf(buf, sizeof buf, "percentile(%g)", policy.q); return buf;
  }
  return "unknown";
}

std::vector<double> anchor_distances(const nd::Vector& x_test, const nd::Matrix& train_xs,
                                     const DeltaBank& bank) {
  BITRANS_EXPECT(x_test.size() == train_xs.rows(), "select_anchors: query dimension mismatch");
  BITRANS_EXPECT(static_cast<std::size_t>(train_xs.rows()) == bank.dim(),
                 "select_anchors: bank dimension mismatch");
  std::vector<double> d(static_cast<std::size_t>(train_xs.cols()));
  nd::Vector diff(x_test.size());
  for (Eigen::Index i = 0; i < train_xs.cols(); ++i) {
    diff = x_test - train_xs.col(i);
    d[static_cast<std::size_t>(i)] = bank.distance(diff);
  }
  return d;
}

AnchorSet select_from_distances(const std::vector<double>& distances, const RhoPolicy& policy) {
  policy.validate();
  BITRANS_EXPECT(!distances.empty(), "select_anchors: no training points");
  AnchorSet out;
  switch (policy.kind) {
    case RhoPolicy::Kind::fixed: out.rho = policy.rho; break;
    case RhoPolicy::Kind::nearest:
      out.rho = *std::min_element(distances.begin(), distances.end());
      break;
    case RhoPolicy::Kind::percentile: {
      std::vector<double> sorted = distances;
      std::sort(sorted.begin(), sorted.end());
      const auto n = static_cast<double>(sorted.size());
      auto rank = static_cast<std::size_t>(std::ceil(policy.q / 100.0 * n));
      rank = std::clamp<std::size_t>(rank, 1, sorted.size());
      out.rho = sorted[rank - 1];
      break;
    }
  }
  for (std::size_t i = 0; i < distances.size(); ++i)
    if (distances[i] <= out.rho) out.indices.push_back(i);
  if (out.indices.empty()) {
    if (policy.kind == RhoPolicy::Kind::fixed && policy.fallback_to_nearest)
      return select_from_distances(distances, RhoPolicy::nearest());
    throw EmptyAnchorError("select_anchors: no training point within rho = " + std::to_string(out.rho));
  }
  return out;
}

AnchorSet select_anchors(const nd::Vector& x_test, const nd::Matrix& train_xs, const DeltaBank& bank,
                         const RhoPolicy& policy) {
  return select_from_distances(anchor_distances(x_test, train_xs, bank), policy);
}

}  // namespace bitrans::transduce
