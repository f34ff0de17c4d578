#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "pdommd/core.hpp"

namespace pdommd {

/**
 * Uniform sampling lattice, symmetric about 0 and half-open:
 * per axis the points are x_j = -half_width + j*spacing, j = 0..n-1,
 * with spacing = 2*half_width/n. The dual (frequency) grid of a Grid has
 * spacing_freq = pi/half_width and half_width_freq = pi/spacing, which is
 * again a valid Grid with the same point count.
 */
struct Grid {
  int dim = 1;              // 1 or 2
  int points_per_axis = 0;  // power of two, >= 8
  double half_width = 0.0;  // same extent on every axis
  double spacing = 0.0;     // derived: 2*half_width / points_per_axis

  std::size_t size() const {
    std::size_t n = static_cast<std::size_t>(points_per_axis);
    return dim == 1 ? n : n * n;
  }

  double coord(int j) const { return -half_width + spacing * j; }

  // lattice point of a flat row-major index
  std::array<double, 2> point(std::size_t flat) const {
    if (dim == 1) return {coord(static_cast<int>(flat)), 0.0};
    const int n = points_per_axis;
    return {coord(static_cast<int>(flat) / n), coord(static_cast<int>(flat) % n)};
  }

  // index of the nearest lattice point along one axis, clamped to the box
  int nearest_axis_index(double x) const {
    int j = static_cast<int>(std::lround((x + half_width) / spacing));
    if (j < 0) j = 0;
    if (j >= points_per_axis) j = points_per_axis - 1;
    return j;
  }

  std::size_t nearest_index(const std::array<double, 2>& p) const {
    if (dim == 1) return static_cast<std::size_t>(nearest_axis_index(p[0]));
    return static_cast<std::size_t>(nearest_axis_index(p[0])) * points_per_axis +
           nearest_axis_index(p[1]);
  }

  bool contains(const std::array<double, 2>& p) const {
    for (int a = 0; a < dim; ++a)
      if (p[a] < -half_width || p[a] >= half_width) return false;
    return true;
  }

  double cell_weight() const { return dim == 1 ? spacing : spacing * spacing; }

  bool operator==(const Grid& o) const {
    return dim == o.dim && points_per_axis == o.points_per_axis &&
           half_width == o.half_width;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline Grid make_grid(int dim, int points_per_axis, double half_width) {
  if (dim != 1 && dim != 2)
    throw InvalidGrid("dim must be 1 or 2, got " + std::to_string(dim));
  if (!is_power_of_two(points_per_axis) || points_per_axis < 8)
    throw InvalidGrid("points_per_axis must be a power of two >= 8, got " +
                      std::to_string(points_per_axis));
  if (!(half_width > 0.0)) throw InvalidGrid("half_width must be positive");
  Grid g;
  g.dim = dim;
  g.points_per_axis = points_per_axis;
  g.half_width = half_width;
  g.spacing = 2.0 * half_width / points_per_axis;
  return g;
}

inline Grid dual_grid(const Grid& g) {
  return make_grid(g.dim, g.points_per_axis, kPi / g.spacing);
}

// default desk-scale grids
inline Grid default_grid(int dim) {
  return dim == 1 ? make_grid(1, 512, 16.0) : make_grid(2, 64, 8.0);
}

/// Complex-valued function sampled on a Grid, row-major over lattice indices.
struct GridFunction {
  Grid grid;
  std::vector<cxd> values;

  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid(g), values(g.size(), cxd{0, 0}) {}
  GridFunction(const Grid& g, std::vector<cxd> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.size())
      throw InvalidGrid("value count does not match grid cardinality");
  }
};

inline void check_finite(const GridFunction& f, const char* where) {
  for (const cxd& v : f.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError(std::string(where) + " produced a non-finite value");
}

template <typename Fn>
GridFunction sample(const Grid& g, Fn&& fn) {
  GridFunction out(g);
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) out.values[i] = cxd(fn(g.point(i)));
  return out;
}

inline cxd integrate(const GridFunction& f) {
  // Riemann sum; equals the trapezoid rule for integrands that decay below
  // rounding at the boundary, which is the documented accuracy assumption.
  cxd acc{0, 0};
  for (const cxd& v : f.values) acc += v;
  return acc * f.grid.cell_weight();
}

inline cxd inner_product(const GridFunction& f, const GridFunction& g) {
  if (f.grid != g.grid) throw GridMismatch("inner_product needs a common grid");
  cxd acc{0, 0};
  const std::size_t n = f.values.size();
  for (std::size_t i = 0; i < n; ++i) acc += std::conj(f.values[i]) * g.values[i];
  return acc * f.grid.cell_weight();
}

enum class NormKind { l2, linf, l1 };

inline double norm(const GridFunction& f, NormKind which) {
  switch (which) {
    case NormKind::l2: {
      double acc = 0;
      for (const cxd& v : f.values) acc += std::norm(v);
      return std::sqrt(acc * f.grid.cell_weight());
    }
    case NormKind::linf: {
      double m = 0;
      for (const cxd& v : f.values) m = std::max(m, std::abs(v));
      return m;
    }
    case NormKind::l1: {
      double acc = 0;
      for (const cxd& v : f.values) acc += std::abs(v);
      return acc * f.grid.cell_weight();
    }
  }
  return 0;
}

}  // namespace pdommd
