#include "bitrans/funcgen/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "bitrans/error.hpp"

namespace bitrans::funcgen {
namespace {

double box_volume(const Box& box) {
  double v = 1.0;
  for (const auto& iv : box) v *= iv.length();
  return v;
}

void validate_region(const std::vector<Box>& region, std::size_t dim, const char* field) {
  if (region.empty()) throw ValidationError(field, "range list is empty");
  for (const auto& box : region) {
    if (box.size() != dim)
      throw ValidationError(field, "box has " + std::to_string(box.size()) + " intervals, function takes " +
                                       std::to_string(dim) + " inputs");
    for (const auto& iv : box)
      if (!(iv.lo < iv.hi)) throw ValidationError(field, "interval requires lo < hi");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool region_contains(const std::vector<Box>& region, const nd::Vector& x) {
  for (const auto& box : region) {
    if (box.size() != static_cast<std::size_t>(x.size())) continue;
    bool inside = true;
    for (std::size_t d = 0; d < box.size() && inside; ++d)
      inside = box[d].contains(x(static_cast<Eigen::Index>(d)));
    if (inside) return true;
  }
  return false;
}

nd::Vector sample_region(const std::vector<Box>& region, nd::Rng& rng) {
  BITRANS_EXPECT(!region.empty(), "sample_region: empty region");
  double total = 0.0;
  for (const auto& box : region) total += box_volume(box);
  double pick = rng.uniform() * total;
  std::size_t chosen = region.size() - 1;
  for (std::size_t b = 0; b < region.size(); ++b) {
    const double v = box_volume(region[b]);
    if (pick < v) {
      chosen = b;
      break;
    }
    pick -= v;
  }
  const Box& box = region[chosen];
  nd::Vector x(static_cast<Eigen::Index>(box.size()));
  for (std::size_t d = 0; d < box.size(); ++d) {
    double v = rng.uniform(box[d].lo, box[d].hi);
    if (v >= box[d].hi) v = std::nextafter(box[d].hi, box[d].lo);
    x(static_cast<Eigen::Index>(d)) = v;
  }
  return x;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::in_support: return "in_support";
    case Split::oos: return "oos";
  }
  return "unknown";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "in_support") return Split::in_support;
  if (name == "oos") return Split::oos;
  throw ValidationError("split", "unknown split '" + std::string(name) + "'");
}

std::size_t Dataset::count(Split split) const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.split == split ? 1 : 0;
  return n;
}

nd::Matrix Dataset::xs(Split split) const {
  nd::Matrix out(static_cast<Eigen::Index>(input_dim()), static_cast<Eigen::Index>(count(split)));
  Eigen::Index c = 0;
  for (const auto& s : samples)
    if (s.split == split) out.col(c++) = s.x;
  return out;
}

nd::Matrix Dataset::ys(Split split) const {
  nd::Matrix out(static_cast<Eigen::Index>(output_dim()), static_cast<Eigen::Index>(count(split)));
  Eigen::Index c = 0;
  for (const auto& s : samples)
    if (s.split == split) out.col(c++) = s.y;
  return out;
}

Dataset sample_dataset(const FunctionId& function, const RangeSpec& ranges, std::size_t n_train,
                       std::size_t n_test, double noise, std::uint64_t seed) {
  if (n_train == 0) throw ValidationError("data.n_train", "must be positive");
  if (n_test == 0) throw ValidationError("data.n_test", "must be positive");
  if (!(noise >= 0.0)) throw ValidationError("data.noise", "must be nonnegative");
  const TargetFunction target(function);
  validate_region(ranges.train, target.input_dim(), "data.train");
  validate_region(ranges.test, target.input_dim(), "data.test");

  Dataset ds;
  ds.function = function;
  ds.ranges = ranges;
  ds.noise = noise;
  ds.seed = seed;
  ds.samples.reserve(n_train + 2 * n_test);

  nd::Rng rng(seed);
  auto draw = [&](const std::vector<Box>& region, std::size_t n, Split split) {
    for (std::size_t i = 0; i < n; ++i) {
      nd::Vector x = sample_region(region, rng);
      if (!target.defined_at(x))
        throw ValidationError(split == Split::oos ? "data.test" : "data.train",
                              "region contains points where the function is undefined");
      nd::Vector y = target(x);
      if (split == Split::train && noise > 0.0)
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += noise * rng.normal();
      ds.samples.push_back({std::move(x), std::move(y), split});
    }
  };
  draw(ranges.train, n_train, Split::train);
  draw(ranges.train, n_test, Split::in_support);
  draw(ranges.test, n_test, Split::oos);
  return ds;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open '" + path.string() + "' for writing");
  out << "split";
  for (std::size_t d = 0; d < dataset.input_dim(); ++d) out << ",x" << d;
  for (std::size_t k = 0; k < dataset.output_dim(); ++k) out << ",y" << k;
  out << '\n';
  for (const auto& s : dataset.samples) {
    out << to_string(s.split);
    for (Eigen::Index d = 0; d < s.x.size(); ++d) out << ',' << format_double(s.x(d));
    for (Eigen::Index k = 0; k < s.y.size(); ++k) out << ',' << format_double(s.y(k));
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write to '" + path.string() + "' failed");
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset", "missing header");
  std::size_t n_x = 0, n_y = 0;
  {
    std::stringstream header(line);
    std::string col;
    std::getline(header, col, ',');
    if (col != "split") throw ValidationError("dataset", "first column must be 'split'");
    while (std::getline(header, col, ',')) {
      if (!col.empty() && col.back() == '\r') col.pop_back();
      if (col.size() > 1 && col[0] == 'x' && n_y == 0)
        ++n_x;
      else if (col.size() > 1 && col[0] == 'y')
        ++n_y;
      else
        throw ValidationError("dataset", "unexpected column '" + col + "'");
    }
  }
  if (n_x == 0 || n_y == 0) throw ValidationError("dataset", "need at least one x and one y column");
  Dataset ds;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    Sample s;
    s.split = split_from_string(cell);
    s.x.resize(static_cast<Eigen::Index>(n_x));
    s.y.resize(static_cast<Eigen::Index>(n_y));
    for (std::size_t c = 0; c < n_x + n_y; ++c) {
      if (!std::getline(ss, cell, ','))
        throw ValidationError("dataset", "row " + std::to_string(row) + " is short");
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw ValidationError("dataset", "row " + std::to_string(row) + " has a non-numeric cell");
      }
      if (c < n_x)
        s.x(static_cast<Eigen::Index>(c)) = v;
      else
        s.y(static_cast<Eigen::Index>(c - n_x)) = v;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace bitrans::funcgen
