#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bitrans/ndcore/matrix.hpp"

namespace bitrans::transduce {

inline constexpr std::size_t kDefaultBankCap = 20000;

/// Set of pairwise training differences x_i - x_j (one per column), always
/// containing the zero vector, with exact Euclidean nearest-distance queries.
class DeltaBank {
 public:
  DeltaBank() = default;

  /// Wraps stored deltas (for example read back from CSV). Columns are
  /// sorted and deduplicated; the zero vector is added if missing.
  explicit DeltaBank(nd::Matrix deltas);

  /// All ordered differences i != j when n(n-1) <= cap, otherwise a seeded
  /// uniform subsample of `cap` distinct differences. Requires >= 2 points.
  static DeltaBank build(const nd::Matrix& train_xs, std::size_t cap = kDefaultBankCap,
                         std::uint64_t seed = 0);

  std::size_t size() const { return static_cast<std::size_t>(deltas_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(deltas_.rows()); }
  const nd::Matrix& deltas() const { return deltas_; }
  bool contains(const nd::Vector& v) const;

  /// min over stored deltas of ||v - delta||_2.
  double distance(const nd::Vector& v) const;

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int left = -1;
    int right = -1;
    int axis = 0;
    double split = 0.0;
  };

  void build_index();
  int build_node(int begin, int end);
  void search(int node, const double* q, double& best) const;

  nd::Matrix deltas_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

inline double bank_distance(const DeltaBank& bank, const nd::Vector& v) { return bank.distance(v); }

/// One delta per row, no header, doubles at 17 significant digits.
void write_bank_csv(const DeltaBank& bank, const std::filesystem::path& path);
DeltaBank read_bank_csv(const std::filesystem::path& path);

}  // namespace bitrans::transduce
