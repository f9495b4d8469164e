#include "bitrans/funcgen/functions.hpp"

#include <algorithm>
#include <cmath>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::funcgen {
namespace {

struct PeriodSplit {
  double index;      // floor(x / period)
  double remainder;  // x - period * index, in [0, period)
};

PeriodSplit split_period(double x, double period) {
  double q = std::floor(x / period);
  double r = x - period * q;
  if (r < 0.0) {
    r += period;
    q -= 1.0;
  } else if (r >= period) {
    r -= period;
    q += 1.0;
  }
  return {q, r};
}

// Shared period-3 shape: sinusoid on [0,1), line on [1,2), parabola on [2,3).
double mixture_shape(double xv) {
  if (xv < 1.0) return std::sin(10.0 * xv);
  if (xv < 2.0) return std::sin(10.0) + (xv - 1.0);
  return std::sin(10.0) + 1.0 + (xv - 2.0) * (xv - 2.0);
}

}  // namespace

double eval_sawtooth(double x, double amplitude, double period) {
  BITRANS_EXPECT(period > 0.0, "eval_sawtooth: period must be positive");
  const auto [k, r] = split_period(x, period);
  const double ramp = r * amplitude / period;
  const bool even = std::fmod(std::abs(k), 2.0) == 0.0;
  return even ? ramp : amplitude - ramp;
}

double eval_mixed_periodic(double x) {
  const auto [xm, xv] = split_period(x, 9.0);
  double shape;
  if (xv < 3.0) {
    shape = mixture_shape(xv);
  } else {
    const double u = (xv - 3.0) / 2.0;
    if (xv < 5.0)
      shape = std::sin(10.0 * u);
    else if (xv < 7.0)
      shape = std::sin(10.0) + (u - 1.0);
    else
      shape = std::sin(10.0) + 1.0 + (u - 2.0) * (u - 2.0);
  }
  return xm * shape;
}

double eval_poly8(double x) {
  return (x - 0.1) * (x + 0.4) * (x + 0.7) * (x - 0.5) * (x - 1.5) * (x + 1.75) * (x + 1.0) *
         (x - 1.2);
}

double eval_growing_mixture(double x) {
  const auto [xm, xv] = split_period(x, 3.0);
  return xm * mixture_shape(xv);
}

double eval_equivariant_mixture(double x) {
  const auto [xm, xv] = split_period(x, 3.0);
  return xm * 3.0 + mixture_shape(xv);
}

Tiled2D::Tiled2D(std::uint64_t seed) : seed_(seed) {
  nd::Rng rng(seed);
  for (auto& cell : table_) {
    cell[0] = rng.uniform(-1.0, 1.0);
    cell[1] = rng.uniform(-1.0, 1.0);
  }
}

std::array<double, 2> Tiled2D::entry(int i, int j) const {
  BITRANS_EXPECT(i >= 0 && i < kGrid && j >= 0 && j < kGrid, "Tiled2D::entry: index out of range");
  return table_[static_cast<std::size_t>(i * kGrid + j)];
}

bool Tiled2D::locate(double x1, double x2, Cell& cell) const {
  auto axis = [](double x, long& tile, int& idx) {
    const double t = std::floor((x - kLo) / kShift);
    const double local = x - kShift * t;
    if (local < kLo || local > kHi) return false;
    tile = static_cast<long>(t);
    const double g = std::round((local - kLo) / kSpacing);
    idx = static_cast<int>(std::clamp(g, 0.0, static_cast<double>(kGrid - 1)));
    return true;
  };
  return axis(x1, cell.tile_x1, cell.i) && axis(x2, cell.tile_x2, cell.j);
}

std::array<double, 2> Tiled2D::eval(double x1, double x2) const {
  Cell cell;
  if (!locate(x1, x2, cell))
    throw ContractViolation("Tiled2D::eval: point lies between tiles");
  auto v = entry(cell.i, cell.j);
  if (cell.tile_x2 % 2 != 0) v[0] = -v[0];
  if (cell.tile_x1 % 2 != 0) v[1] = -v[1];
  return v;
}

std::string_view to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::mixed_periodic: return "mixed_periodic";
    case FunctionKind::sawtooth: return "sawtooth";
    case FunctionKind::poly8: return "poly8";
    case FunctionKind::growing_mixture: return "growing_mixture";
    case FunctionKind::equivariant_mixture: return "equivariant_mixture";
    case FunctionKind::tiled2d: return "tiled2d";
  }
  return "unknown";
}

FunctionKind function_kind_from_string(std::string_view name) {
  for (auto k : {FunctionKind::mixed_periodic, FunctionKind::sawtooth, FunctionKind::poly8,
                 FunctionKind::growing_mixture, FunctionKind::equivariant_mixture, FunctionKind::tiled2d})
    if (to_string(k) == name) return k;
  throw ValidationError("function.name", "unknown function '" + std::string(name) + "'");
}

TargetFunction::TargetFunction(FunctionId id) : id_(id), tiled_(id.tile_seed) {
  if (id_.kind == FunctionKind::sawtooth && !(id_.period > 0.0))
    throw ValidationError("function.period", "sawtooth period must be positive");
}

bool TargetFunction::defined_at(const nd::Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) return false;
  if (id_.kind != FunctionKind::tiled2d) return true;
  Tiled2D::Cell cell;
  return tiled_.locate(x(0), x(1), cell);
}

nd::Vector TargetFunction::operator()(const nd::Vector& x) const {
  BITRANS_EXPECT(static_cast<std::size_t>(x.size()) == input_dim(),
                 "TargetFunction: input dimension mismatch");
  nd::Vector y(static_cast<Eigen::Index>(output_dim()));
  switch (id_.kind) {
    case FunctionKind::mixed_periodic: y(0) = eval_mixed_periodic(x(0)); break;
    case FunctionKind::sawtooth: y(0) = eval_sawtooth(x(0), id_.amplitude, id_.period); break;
    case FunctionKind::poly8: y(0) = eval_poly8(x(0)); break;
    case FunctionKind::growing_mixture: y(0) = eval_growing_mixture(x(0)); break;
    case FunctionKind::equivariant_mixture: y(0) = eval_equivariant_mixture(x(0)); break;
    case FunctionKind::tiled2d: {
      const auto v = tiled_.eval(x(0), x(1));
      y(0) = v[0];
      y(1) = v[1];
      break;
    }
  }
  return y;
}

}  // namespace bitrans::funcgen
