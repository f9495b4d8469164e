#include "bitrans/transduce/delta_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::transduce {
namespace {

constexpr int kLeafSize = 8;

using Key = std::vector<double>;

Key column_key(const nd::Matrix& m, Eigen::Index c) {
  Key k(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    // Normalise -0.0 so the zero difference deduplicates.
    const double v = m(r, c);
    k[static_cast<std::size_t>(r)] = v == 0.0 ? 0.0 : v;
  }
  return k;
}

nd::Matrix from_keys(const std::set<Key>& keys, std::size_t dim) {
  nd::Matrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(keys.size()));
  Eigen::Index c = 0;
  for (const auto& k : keys) {
    for (std::size_t r = 0; r < dim; ++r) out(static_cast<Eigen::Index>(r), c) = k[r];
    ++c;
  }
  return out;
}

}  // namespace

DeltaBank::DeltaBank(nd::Matrix deltas) {
  BITRANS_EXPECT(deltas.rows() > 0, "DeltaBank: zero-dimensional deltas");
  BITRANS_EXPECT(deltas.allFinite(), "DeltaBank: non-finite delta");
  std::set<Key> keys;
  for (Eigen::Index c = 0; c < deltas.cols(); ++c) keys.insert(column_key(deltas, c));
  keys.insert(Key(static_cast<std::size_t>(deltas.rows()), 0.0));
  deltas_ = from_keys(keys, static_cast<std::size_t>(deltas.rows()));
  build_index();
}

DeltaBank DeltaBank::build(const nd::Matrix& train_xs, std::size_t cap, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(train_xs.cols());
  BITRANS_EXPECT(n >= 2, "DeltaBank::build: need at least two training points");
  BITRANS_EXPECT(cap >= 1, "DeltaBank::build: cap must be positive");
  const auto dim = static_cast<std::size_t>(train_xs.rows());

  std::set<Key> keys;
  keys.insert(Key(dim, 0.0));
  auto add_pair = [&](std::size_t i, std::size_t j) {
    Key k(dim);
    for (std::size_t r = 0; r < dim; ++r) {
      const double v = train_xs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) -
                       train_xs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      k[r] = v == 0.0 ? 0.0 : v;
    }
    keys.insert(std::move(k));
  };

  const std::size_t pairs = n * (n - 1);
  if (pairs <= cap) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) add_pair(i, j);
  } else {
    nd::Rng rng(seed);
    const std::size_t max_draws = 50 * cap + 1000;
    for (std::size_t draws = 0; keys.size() < cap && draws < max_draws; ++draws) {
      const std::size_t r = rng.index(pairs);
      const std::size_t i = r / (n - 1);
      std::size_t j = r % (n - 1);
      if (j >= i) ++j;
      add_pair(i, j);
    }
  }
  DeltaBank bank;
  bank.deltas_ = from_keys(keys, dim);
  bank.build_index();
  return bank;
}

bool DeltaBank::contains(const nd::Vector& v) const { return distance(v) == 0.0; }

void DeltaBank::build_index() {
  order_.resize(size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.clear();
  nodes_.reserve(2 * size() / kLeafSize + 2);
  if (size() > 0) build_node(0, static_cast<int>(size()));
}

int DeltaBank::build_node(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  int axis = 0;
  double widest = -1.0;
  for (Eigen::Index r = 0; r < deltas_.rows(); ++r) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = begin; k < end; ++k) {
      const double v = deltas_(r, order_[static_cast<std::size_t>(k)]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = static_cast<int>(r);
    }
  }
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return deltas_(axis, a) < deltas_(axis, b); });
  const double split = deltas_(axis, order_[static_cast<std::size_t>(mid)]);
  const int left = build_node(begin, mid);
  const int right = build_node(mid, end);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void DeltaBank::search(int node_id, const double* q, double& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.left < 0) {
    const Eigen::Index dim = deltas_.rows();
    for (int k = node.begin; k < node.end; ++k) {
      const double* d = deltas_.col(order_[static_cast<std::size_t>(k)]).data();
      double acc = 0.0;
      for (Eigen::Index r = 0; r < dim; ++r) {
        const double diff = q[r] - d[r];
        acc += diff * diff;
      }
      best = std::min(best, acc);
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int first = diff < 0.0 ? node.left : node.right;
  const int second = diff < 0.0 ? node.right : node.left;
  search(first, q, best);
  if (diff * diff < best) search(second, q, best);
}

double DeltaBank::distance(const nd::Vector& v) const {
  BITRANS_EXPECT(static_cast<std::size_t>(v.size()) == dim(), "bank_distance: dimension mismatch");
  BITRANS_EXPECT(!nodes_.empty(), "bank_distance: empty bank");
  double best = std::numeric_limits<double>::infinity();
  search(0, v.data(), best);
  return std::sqrt(best);
}

void write_bank_csv(const DeltaBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
  char buf[40];
  for (std::size_t c = 0; c < bank.size(); ++c) {
    for (std::size_t r = 0; r < bank.dim(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g",
                    bank.deltas()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      out << (r ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write to '" + path.string() + "' failed");
}

DeltaBank read_bank_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open '" + path.string() + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("delta_bank", "non-numeric cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError("delta_bank", "rows have different widths");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("delta_bank", "empty file");
  nd::Matrix m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t r = 0; r < rows[c].size(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[c][r];
  return DeltaBank(std::move(m));
}

}  // namespace bitrans::transduce
