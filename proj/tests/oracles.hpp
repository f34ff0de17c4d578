#pragma once

// Independent oracles for the test suites. Everything here is deliberately
// brute force (direct Riemann sums, explicit dense assembly) and never calls
// the implementation path it is used to check.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "pdommd/grid.hpp"

namespace oracle {

using pdommd::cxd;
using pdommd::Grid;
using pdommd::GridFunction;

// forward unitary transform by direct quadrature at one dual point
inline cxd fourier_quadrature(const GridFunction& f,
                              const std::array<double, 2>& y) {
  const Grid& g = f.grid;
  cxd acc{0, 0};
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    const auto x = g.point(j);
    acc += f.values[j] * std::polar(1.0, -(x[0] * y[0] + x[1] * y[1]));
  }
  return acc * g.cell_weight() * std::pow(pdommd::kTwoPi, -0.5 * g.dim);
}

// direct PDO action (2 pi)^(-d/2) Int F(x,y) u^(y) e^{i x.y} dy with the
// transform of u itself done by quadrature; no FFT anywhere
inline std::vector<cxd> pdo_action_quadrature(
    const std::function<cxd(double, double)>& symbol_1d, const GridFunction& u) {
  const Grid& g = u.grid;
  const Grid d = pdommd::dual_grid(g);
  std::vector<cxd> uhat(d.size());
  for (std::size_t k = 0; k < d.size(); ++k)
    uhat[k] = fourier_quadrature(u, d.point(k));
  std::vector<cxd> out(g.size());
  const double c = d.cell_weight() * std::pow(pdommd::kTwoPi, -0.5 * g.dim);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    cxd acc{0, 0};
    for (std::size_t k = 0; k < d.size(); ++k) {
      const auto y = d.point(k);
      acc += symbol_1d(x[0], y[0]) * uhat[k] * std::polar(1.0, x[0] * y[0]);
    }
    out[i] = acc * c;
  }
  return out;
}

// singular values of the weight-symmetrized kernel matrix, assembled entry by
// entry from a callable
inline Eigen::VectorXd dense_singular_values(
    const std::function<cxd(const std::array<double, 2>&,
                            const std::array<double, 2>&)>& f,
    const Grid& gx, const Grid& gy) {
  const std::size_t nx = gx.size(), ny = gy.size();
  Eigen::MatrixXcd a(nx, ny);
  const double sw = std::sqrt(gx.cell_weight() * gy.cell_weight());
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      a(i, j) = f(gx.point(i), gy.point(j)) * sw;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues();
}

// sup_x Int |F(x,y)|^2 dy by direct quadrature over the same lattices
inline double two_inf_quadrature(
    const std::function<cxd(const std::array<double, 2>&,
                            const std::array<double, 2>&)>& f,
    const Grid& gx, const Grid& gy) {
  double best = 0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    double row = 0;
    for (std::size_t j = 0; j < gy.size(); ++j)
      row += std::norm(f(gx.point(i), gy.point(j)));
    best = std::max(best, row * gy.cell_weight());
  }
  return std::sqrt(best);
}

// closed-form MMD^2 between N(a,1) and N(b,1) under K(s,t) = sqrt(pi) e^{-(s-t)^2/4}
inline double gaussian_mmd_sq(double a, double b) {
  auto e = [](double m) { return std::sqrt(pdommd::kPi / 2.0) * std::exp(-m * m / 8.0); };
  return e(0) + e(0) - 2.0 * e(a - b);
}

}  // namespace oracle
