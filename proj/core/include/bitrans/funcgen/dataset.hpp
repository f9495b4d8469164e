#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "bitrans/funcgen/functions.hpp"
#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::funcgen {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;  // exclusive
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x < hi; }
};

/// Axis-aligned box, one interval per input dimension.
using Box = std::vector<Interval>;

/// Training and test regions as unions of boxes. In 1-D a box is a single
/// interval, so [10,20) U [40,50) is two boxes.
struct RangeSpec {
  std::vector<Box> train;
  std::vector<Box> test;
};

bool region_contains(const std::vector<Box>& region, const nd::Vector& x);

/// Uniform draw over a union of boxes; each box is weighted by its volume.
nd::Vector sample_region(const std::vector<Box>& region, nd::Rng& rng);

enum class Split { train, in_support, oos };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

struct Sample {
  nd::Vector x;
  nd::Vector y;
  Split split = Split::train;
};

struct Dataset {
  FunctionId function;
  RangeSpec ranges;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;

  std::size_t input_dim() const { return samples.empty() ? 0 : static_cast<std::size_t>(samples.front().x.size()); }
  std::size_t output_dim() const { return samples.empty() ? 0 : static_cast<std::size_t>(samples.front().y.size()); }
  std::size_t count(Split split) const;

  /// Inputs / labels of one split, one sample per column.
  nd::Matrix xs(Split split) const;
  nd::Matrix ys(Split split) const;
};

/// Train points and in-support test points are drawn from ranges.train,
/// out-of-support points from ranges.test. Gaussian label noise with
/// standard deviation `noise` is added to the train split only.
Dataset sample_dataset(const FunctionId& function, const RangeSpec& ranges, std::size_t n_train,
                       std::size_t n_test, double noise, std::uint64_t seed);

/// CSV with header `split,x0[,x1..],y0[,y1..]`, doubles at 17 significant digits.
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace bitrans::funcgen
