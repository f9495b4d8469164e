#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "bitrans/ndcore/matrix.hpp"

namespace bitrans::funcgen {

// Scalar targets. Piecewise branches are half-open [lo, hi); x mod P is the
// floor-based remainder in [0, P).

/// Rising ramp on even periods, falling ramp on odd periods.
double eval_sawtooth(double x, double amplitude, double period);

/// Period-9 mixture of a sinusoid, a line and a parabola at two different
/// horizontal scales, multiplied by x_m = floor(x / 9).
double eval_mixed_periodic(double x);

/// (x-0.1)(x+0.4)(x+0.7)(x-0.5)(x-1.5)(x+1.75)(x+1)(x-1.2)
double eval_poly8(double x);

/// Period-3 mixture multiplied by x_m = floor(x / 3).
double eval_growing_mixture(double x);

/// Period-3 mixture offset by 3 * floor(x / 3): f(x + 3) = f(x) + 3.
double eval_equivariant_mixture(double x);

/// Tiling of a seeded random table over the block [1, 5]^2.
///
/// The table sits on a 0.5-spaced 9x9 grid and queries snap to the nearest
/// grid point. Tile (a, b) covers [1 + 6a, 5 + 6a] x [1 + 6b, 5 + 6b]; its
/// label is (y1 * (-1)^b, y2 * (-1)^a) of the central entry, so a shift
/// along x1 negates y2 and a shift along x2 negates y1. Points between tiles
/// are undefined.
class Tiled2D {
 public:
  static constexpr int kGrid = 9;
  static constexpr double kLo = 1.0;
  static constexpr double kHi = 5.0;
  static constexpr double kSpacing = 0.5;
  static constexpr double kShift = 6.0;

  explicit Tiled2D(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Throws ContractViolation for points in the gaps between tiles.
  std::array<double, 2> eval(double x1, double x2) const;

  /// Tile coordinates and in-tile grid cell of a point, or false if the
  /// point lies between tiles.
  struct Cell {
    long tile_x1 = 0;
    long tile_x2 = 0;
    int i = 0;
    int j = 0;
  };
  bool locate(double x1, double x2, Cell& cell) const;

  /// Central-tile table entry at grid index (i, j).
  std::array<double, 2> entry(int i, int j) const;

 private:
  std::uint64_t seed_;
  std::array<std::array<double, 2>, kGrid * kGrid> table_{};
};

enum class FunctionKind { mixed_periodic, sawtooth, poly8, growing_mixture, equivariant_mixture, tiled2d };

std::string_view to_string(FunctionKind kind);
FunctionKind function_kind_from_string(std::string_view name);

struct FunctionId {
  FunctionKind kind = FunctionKind::mixed_periodic;
  double amplitude = 1.0;      // sawtooth only
  double period = 1.0;         // sawtooth only, > 0
  std::uint64_t tile_seed = 0;  // tiled2d only
};

/// Vector-valued evaluator for a FunctionId.
class TargetFunction {
 public:
  explicit TargetFunction(FunctionId id);

  const FunctionId& id() const { return id_; }
  std::size_t input_dim() const { return id_.kind == FunctionKind::tiled2d ? 2 : 1; }
  std::size_t output_dim() const { return input_dim(); }

  /// Whether x lies where the function is defined (only tiled2d has gaps).
  bool defined_at(const nd::Vector& x) const;
  nd::Vector operator()(const nd::Vector& x) const;

  const Tiled2D* tiled() const { return id_.kind == FunctionKind::tiled2d ? &tiled_ : nullptr; }

 private:
  FunctionId id_;
  Tiled2D tiled_;
};

}  // namespace bitrans::funcgen
