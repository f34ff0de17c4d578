#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <vector>

#include "pdommd/dftmat.hpp"
#include "pdommd/symbols.hpp"

namespace pdommd {

enum class OperatorKind { integral_of, pdo_xd, pdo_dx };

/**
 * Grid realization of the three operator shapes attached to a symbol F:
 *   integral_of  A[i,j] = F(x_i, y_j) w_j            (plain integral operator)
 *   pdo_xd       B = (F o invDFT) * DFT              (u -> PDO action on u)
 *   pdo_dx       C = DFT * B^dag * invDFT
 * pdo matrices are normalized so the unit symbol acts as the identity; the
 * norm routines below undo that normalization with a (2 pi)^(d/2) factor so
 * that all three kinds measure the same Schwartz kernel.
 */
struct OperatorMatrix {
  OperatorKind kind;
  Grid grid_row;
  Grid grid_col;
  MatrixC entries;

  double kernel_prefactor() const {
    return kind == OperatorKind::integral_of
               ? 1.0
               : std::pow(kTwoPi, 0.5 * grid_row.dim);
  }
};

inline OperatorMatrix build_operator(const Symbol& sym, OperatorKind kind,
                                     const Grid& grid) {
  const Grid dual = dual_grid(grid);
  DenseSymbol d = [&] {
    if (const auto* dense = std::get_if<DenseSymbol>(&sym)) {
      if (dense->grid_x != grid)
        throw GridMismatch("dense symbol x-grid does not match operator grid");
      if (kind != OperatorKind::integral_of && dense->grid_y != dual)
        throw GridMismatch("PDO construction needs the symbol on grid x dual(grid)");
      return *dense;
    }
    const auto& sep = std::get<SeparableSymbol>(sym);
    if (sep.grid_x != grid)
      throw GridMismatch("separable symbol x-grid does not match operator grid");
    return densify(sep, grid, kind == OperatorKind::integral_of ? sep.grid_y : dual);
  }();

  const std::size_t nx = d.grid_x.size(), ny = d.grid_y.size();
  OperatorMatrix op;
  op.kind = kind;
  if (kind == OperatorKind::integral_of) {
    op.grid_row = d.grid_x;
    op.grid_col = d.grid_y;
    const double w = d.grid_y.cell_weight();
    op.entries.resize(nx, ny);
    parallel_for(0, static_cast<std::int64_t>(nx), [&](std::int64_t i) {
      for (std::size_t j = 0; j < ny; ++j)
        op.entries(i, static_cast<Eigen::Index>(j)) =
            d.values[static_cast<std::size_t>(i) * ny + j] * w;
    });
    return op;
  }

  const MatrixC U = forward_dft_matrix(grid);
  const MatrixC invU = inverse_dft_matrix(grid);
  MatrixC P(nx, ny);
  parallel_for(0, static_cast<std::int64_t>(nx), [&](std::int64_t i) {
    for (std::size_t j = 0; j < ny; ++j)
      P(i, static_cast<Eigen::Index>(j)) =
          d.values[static_cast<std::size_t>(i) * ny + j] *
          invU(i, static_cast<Eigen::Index>(j));
  });
  MatrixC B = P * U;
  if (kind == OperatorKind::pdo_xd) {
    op.grid_row = grid;
    op.grid_col = grid;
    op.entries = std::move(B);
    return op;
  }
  op.grid_row = dual;
  op.grid_col = dual;
  op.entries = U * B.adjoint() * invU;
  return op;
}

// squared quadrature-L2 norms of the kernel rows: D[i] = sum_j |k(i,j)|^2 w_j
inline std::vector<double> row_norm_sq_profile(const OperatorMatrix& op) {
  const double pref = op.kernel_prefactor();
  const double w = op.grid_col.cell_weight();
  const double scale = pref * pref / w;
  std::vector<double> out(static_cast<std::size_t>(op.entries.rows()));
  for (Eigen::Index i = 0; i < op.entries.rows(); ++i)
    out[static_cast<std::size_t>(i)] = scale * op.entries.row(i).squaredNorm();
  return out;
}

/// grid form of sup_x || F(x, .) ||_{L2}
inline double two_inf_norm(const OperatorMatrix& op) {
  double m = 0;
  for (double v : row_norm_sq_profile(op)) m = std::max(m, v);
  return std::sqrt(m);
}

/// Hilbert-Schmidt norm (weighted Frobenius of the kernel)
inline double hs_norm(const OperatorMatrix& op) {
  const double pref = op.kernel_prefactor();
  const double scale =
      pref * pref * op.grid_row.cell_weight() / op.grid_col.cell_weight();
  return std::sqrt(scale * op.entries.squaredNorm());
}

// ---------------------------------------------------------------------------
// Nystrom SVD

/**
 * Singular system of the weight-symmetrized matrix
 * A~[i,j] = F(x_i,y_j) sqrt(w_i w_j); the stored singular vectors are divided
 * by sqrt(w) so they are orthonormal in the quadrature inner product and
 * sum_i sigma_i f_i(x) conj(g_i(y)) reconstructs the symbol.
 */
struct SvdResult {
  Grid grid_x;
  Grid grid_y;
  Eigen::VectorXd sigmas;
  MatrixC left;   // column i: samples of f_i on grid_x
  MatrixC right;  // column i: samples of g_i on grid_y

  int count() const { return static_cast<int>(sigmas.size()); }

  int numerical_rank(double rel_tol = 1e-12) const {
    if (count() == 0 || sigmas[0] <= 0) return 0;
    int r = 0;
    while (r < count() && sigmas[r] > rel_tol * sigmas[0]) ++r;
    return r;
  }

  GridFunction left_function(int i) const {
    GridFunction f(grid_x);
    for (std::size_t j = 0; j < f.values.size(); ++j)
      f.values[j] = left(static_cast<Eigen::Index>(j), i);
    return f;
  }
  GridFunction right_function(int i) const {
    GridFunction g(grid_y);
    for (std::size_t j = 0; j < g.values.size(); ++j)
      g.values[j] = right(static_cast<Eigen::Index>(j), i);
    return g;
  }
};

inline SvdResult nystrom_svd(const DenseSymbol& sym) {
  const std::size_t nx = sym.grid_x.size(), ny = sym.grid_y.size();
  const double swx = std::sqrt(sym.grid_x.cell_weight());
  const double swy = std::sqrt(sym.grid_y.cell_weight());
  MatrixC At(nx, ny);
  parallel_for(0, static_cast<std::int64_t>(nx), [&](std::int64_t i) {
    for (std::size_t j = 0; j < ny; ++j)
      At(i, static_cast<Eigen::Index>(j)) =
          sym.values[static_cast<std::size_t>(i) * ny + j] * swx * swy;
  });
  Eigen::BDCSVD<MatrixC> svd(At, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw ConvergenceError("SVD of the symbol matrix did not converge");
  SvdResult out;
  out.grid_x = sym.grid_x;
  out.grid_y = sym.grid_y;
  out.sigmas = svd.singularValues();
  out.left = svd.matrixU() / swx;
  out.right = svd.matrixV() / swy;
  return out;
}

/// Same singular system computed through QR of the factor matrices; exact for
/// separable symbols and much cheaper than densify + nystrom_svd.
inline SvdResult svd_of_separable(const SeparableSymbol& sym) {
  const Grid& gx = sym.grid_x;
  const Grid& gy = sym.grid_y;
  const std::size_t nx = gx.size(), ny = gy.size();
  const int l = sym.rank();
  SvdResult out;
  out.grid_x = gx;
  out.grid_y = gy;
  if (l == 0) {
    out.sigmas.resize(0);
    out.left.resize(nx, 0);
    out.right.resize(ny, 0);
    return out;
  }
  const double swx = std::sqrt(gx.cell_weight());
  const double swy = std::sqrt(gy.cell_weight());
  MatrixC Fx(nx, l), Gy(ny, l);
  for (int t = 0; t < l; ++t) {
    const auto fv = factor_values(sym.terms[t].f, gx);
    const auto gv = factor_values(sym.terms[t].g, gy);
    for (std::size_t i = 0; i < nx; ++i)
      Fx(static_cast<Eigen::Index>(i), t) = fv[i] * swx;
    for (std::size_t j = 0; j < ny; ++j)
      Gy(static_cast<Eigen::Index>(j), t) = gv[j] * swy;
  }
  Eigen::HouseholderQR<MatrixC> qf(Fx), qg(Gy);
  MatrixC Qf = qf.householderQ() * MatrixC::Identity(nx, l);
  MatrixC Qg = qg.householderQ() * MatrixC::Identity(ny, l);
  MatrixC Rf = qf.matrixQR().topRows(l).triangularView<Eigen::Upper>();
  MatrixC Rg = qg.matrixQR().topRows(l).triangularView<Eigen::Upper>();
  const MatrixC core = Rf * Rg.transpose();
  Eigen::JacobiSVD<MatrixC> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.sigmas = svd.singularValues();
  out.left = (Qf * svd.matrixU()) / swx;
  out.right = (Qg.conjugate() * svd.matrixV()) / swy;
  return out;
}

inline SvdResult symbol_svd(const Symbol& sym) {
  if (const auto* sep = std::get_if<SeparableSymbol>(&sym))
    return svd_of_separable(*sep);
  return nystrom_svd(std::get<DenseSymbol>(sym));
}

/// F_r(x,y) = sum_{i<r} sigma_i f_i(x) conj(g_i(y)) as a separable symbol.
inline SeparableSymbol truncate(const SvdResult& svd, int r) {
  if (r < 0 || r > svd.count())
    throw RankOutOfRange("truncation rank " + std::to_string(r) +
                         " outside [0, " + std::to_string(svd.count()) + "]");
  SeparableSymbol out;
  out.grid_x = svd.grid_x;
  out.grid_y = svd.grid_y;
  const int keep = std::min(r, svd.numerical_rank());
  for (int i = 0; i < keep; ++i) {
    GridFunction f = svd.left_function(i);
    for (auto& v : f.values) v *= svd.sigmas[i];
    GridFunction g = svd.right_function(i);
    for (auto& v : g.values) v = std::conj(v);
    out.terms.push_back({Factor(std::move(f)), Factor(std::move(g))});
  }
  return out;
}

struct CfConstant {
  double value = 0;
  std::vector<double> per_index;  // ||g_i||_inf / ||g_i||_2 for i < r_max
};

/// sup over the first r_max right singular functions of the sup/L2 norm ratio
inline CfConstant c_f_constant(const SvdResult& svd, int r_max) {
  if (r_max < 1 || r_max > svd.numerical_rank())
    throw RankOutOfRange("c_f_constant wants 1 <= r_max <= numerical rank (" +
                         std::to_string(svd.numerical_rank()) + "), got " +
                         std::to_string(r_max));
  CfConstant out;
  for (int i = 0; i < r_max; ++i) {
    const GridFunction g = svd.right_function(i);
    const double ratio = norm(g, NormKind::linf) / norm(g, NormKind::l2);
    out.per_index.push_back(ratio);
    out.value = std::max(out.value, ratio);
  }
  return out;
}

inline double tail_sum(const SvdResult& svd, int r, int power) {
  if (r < 0 || r > svd.count())
    throw RankOutOfRange("tail index outside [0, count]");
  if (power != 1 && power != 2) throw SpecError("tail power must be 1 or 2");
  double acc = 0;
  for (int i = r; i < svd.count(); ++i)
    acc += power == 1 ? svd.sigmas[i] : svd.sigmas[i] * svd.sigmas[i];
  return acc;
}

// ---------------------------------------------------------------------------
// structured row-norm paths for separable symbols (no dense matrices)

namespace detail {

inline void raw_fft(std::vector<cxd>& v, int dim, int n, int sign) {
  if (dim == 1) {
    fft_pow2(v.data(), n, 1, sign);
    return;
  }
  for (int r = 0; r < n; ++r)
    fft_pow2(v.data() + static_cast<long>(r) * n, n, 1, sign);
  for (int c = 0; c < n; ++c) fft_pow2(v.data() + c, n, n, sign);
}

inline int alternating_sign(const Grid& g, std::size_t flat) {
  if (g.dim == 1) return (flat & 1) ? -1 : 1;
  const int n = g.points_per_axis;
  const std::size_t s = flat / n + flat % n;
  return (s & 1) ? -1 : 1;
}

}  // namespace detail

/**
 * Row L2-norm profile of the pdo_dx matrix of a separable symbol, computed
 * through the lattice identity C[a,b] = N^-d sum_l conj(g_l(y_a)) S_l(y_b-y_a)
 * with S_l one FFT of conj(f_l). Bit-compatible with
 * row_norm_sq_profile(build_operator(sym, pdo_dx, grid)) up to rounding.
 */
inline std::vector<double> pdo_dx_row_norm_sq(const SeparableSymbol& sym,
                                              const Grid& grid) {
  const Grid dual = dual_grid(grid);
  if (sym.grid_x != grid)
    throw GridMismatch("symbol x-grid does not match operator grid");
  const std::size_t n = grid.size();
  const int l = sym.rank();
  const int d = grid.dim;
  std::vector<std::vector<cxd>> s_tab(l);
  std::vector<std::vector<cxd>> gvals(l);
  for (int t = 0; t < l; ++t) {
    auto fv = factor_values(sym.terms[t].f, grid);
    for (auto& v : fv) v = std::conj(v);
    detail::raw_fft(fv, d, grid.points_per_axis, +1);
    for (std::size_t m = 0; m < n; ++m)
      fv[m] *= detail::alternating_sign(grid, m);
    s_tab[t] = std::move(fv);
    gvals[t] = factor_values(sym.terms[t].g, dual);
  }
  const double nd = std::pow(static_cast<double>(grid.points_per_axis), d);
  const double scale = std::pow(kTwoPi, d) / dual.cell_weight() / (nd * nd);
  std::vector<double> out(n, 0.0);
  parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t a) {
    double acc = 0;
    for (std::size_t m = 0; m < n; ++m) {
      cxd z{0, 0};
      for (int t = 0; t < l; ++t)
        z += std::conj(gvals[t][static_cast<std::size_t>(a)]) * s_tab[t][m];
      acc += std::norm(z);
    }
    out[static_cast<std::size_t>(a)] = scale * acc;
  });
  return out;
}

inline double pdo_dx_two_inf(const SeparableSymbol& sym, const Grid& grid) {
  double m = 0;
  for (double v : pdo_dx_row_norm_sq(sym, grid)) m = std::max(m, v);
  return std::sqrt(m);
}

/// Same trick for pdo_xd rows: B[i,j] = N^-d sum_l f_l(x_i) R_l(x_i - x_j).
inline std::vector<double> pdo_xd_row_norm_sq(const SeparableSymbol& sym,
                                              const Grid& grid) {
  const Grid dual = dual_grid(grid);
  if (sym.grid_x != grid)
    throw GridMismatch("symbol x-grid does not match operator grid");
  const std::size_t n = grid.size();
  const int l = sym.rank();
  const int d = grid.dim;
  std::vector<std::vector<cxd>> r_tab(l);
  std::vector<std::vector<cxd>> fvals(l);
  for (int t = 0; t < l; ++t) {
    auto gv = factor_values(sym.terms[t].g, dual);
    detail::raw_fft(gv, d, grid.points_per_axis, +1);
    for (std::size_t m = 0; m < n; ++m)
      gv[m] *= detail::alternating_sign(grid, m);
    r_tab[t] = std::move(gv);
    fvals[t] = factor_values(sym.terms[t].f, grid);
  }
  const double nd = std::pow(static_cast<double>(grid.points_per_axis), d);
  const double scale = std::pow(kTwoPi, d) / grid.cell_weight() / (nd * nd);
  std::vector<double> out(n, 0.0);
  parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t a) {
    double acc = 0;
    for (std::size_t m = 0; m < n; ++m) {
      cxd z{0, 0};
      for (int t = 0; t < l; ++t)
        z += fvals[t][static_cast<std::size_t>(a)] * r_tab[t][m];
      acc += std::norm(z);
    }
    out[static_cast<std::size_t>(a)] = scale * acc;
  });
  return out;
}

inline double pdo_hs_norm(const SeparableSymbol& sym, const Grid& grid) {
  double acc = 0;
  for (double v : pdo_xd_row_norm_sq(sym, grid)) acc += v;
  return std::sqrt(acc * grid.cell_weight());
}

}  // namespace pdommd
