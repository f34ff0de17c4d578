#pragma once

#include <Eigen/Dense>

#include "pdommd/fourier.hpp"
#include "pdommd/grid.hpp"

namespace pdommd {

using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

// Dense matrices of the unitary-convention transforms on a grid:
//   forward  U[k,j]   = spacing^d (2 pi)^(-d/2) e^{-i y_k . x_j}
//   inverse  invU[j,k] = spacing_f^d (2 pi)^(-d/2) e^{+i x_j . y_k}
// invU * U is the identity exactly; rows/columns are indexed row-major over
// the flattened lattice. Intended for desk-scale grids where an explicit
// operator matrix is wanted; fourier() is the fast path.

inline MatrixC forward_dft_matrix(const Grid& g) {
  const Grid d = dual_grid(g);
  const std::size_t n = g.size();
  const double scale = g.cell_weight() * std::pow(kTwoPi, -0.5 * g.dim);
  MatrixC U(n, n);
  parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t k) {
    const auto y = d.point(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < n; ++j) {
      const auto x = g.point(j);
      const double phase = -(y[0] * x[0] + y[1] * x[1]);
      U(k, j) = scale * std::polar(1.0, phase);
    }
  });
  return U;
}

inline MatrixC inverse_dft_matrix(const Grid& g) {
  const Grid d = dual_grid(g);
  const std::size_t n = g.size();
  const double scale = d.cell_weight() * std::pow(kTwoPi, -0.5 * g.dim);
  MatrixC V(n, n);
  parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t j) {
    const auto x = g.point(static_cast<std::size_t>(j));
    for (std::size_t k = 0; k < n; ++k) {
      const auto y = d.point(k);
      const double phase = x[0] * y[0] + x[1] * y[1];
      V(j, k) = scale * std::polar(1.0, phase);
    }
  });
  return V;
}

}  // namespace pdommd
