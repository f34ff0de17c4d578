#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <variant>
#include <vector>

#include "pdommd/analytic.hpp"
#include "pdommd/dftmat.hpp"
#include "pdommd/fourier.hpp"
#include "pdommd/grid.hpp"

namespace pdommd {

// A symbol factor is either an analytic descriptor or a sampled function.
using Factor = std::variant<AnalyticTerm, GridFunction>;

inline cxd factor_eval(const Factor& f, int dim, const std::array<double, 2>& p) {
  if (const auto* t = std::get_if<AnalyticTerm>(&f)) return term_eval(*t, dim, p);
  const auto& gf = std::get<GridFunction>(f);
  if (!gf.grid.contains(p))
    throw OutOfDomain("point outside the grid box of a sampled factor");
  return gf.values[gf.grid.nearest_index(p)];
}

// samples of a factor on a target grid; sampled factors must live on it
inline std::vector<cxd> factor_values(const Factor& f, const Grid& g) {
  if (const auto* t = std::get_if<AnalyticTerm>(&f))
    return sample_term(*t, g).values;
  const auto& gf = std::get<GridFunction>(f);
  if (gf.grid != g)
    throw GridMismatch("sampled factor lives on a different grid");
  return gf.values;
}

inline Factor factor_scale(const Factor& f, cxd s, const Grid& fallback) {
  if (const auto* t = std::get_if<AnalyticTerm>(&f)) {
    if (std::holds_alternative<Indicator>(*t) && s != cxd{1, 0}) {
      GridFunction gf = sample_term(*t, fallback);
      for (auto& v : gf.values) v *= s;
      return gf;
    }
    return term_scale(*t, s);
  }
  GridFunction gf = std::get<GridFunction>(f);
  for (auto& v : gf.values) v *= s;
  return gf;
}

inline double factor_l2(const Factor& f, const Grid& g) {
  const auto vals = factor_values(f, g);
  double acc = 0;
  for (const cxd& v : vals) acc += std::norm(v);
  return std::sqrt(acc * g.cell_weight());
}

inline double factor_linf(const Factor& f, const Grid& g) {
  const auto vals = factor_values(f, g);
  double m = 0;
  for (const cxd& v : vals) m = std::max(m, std::abs(v));
  return m;
}

/**
 * Finite-rank symbol F(x,y) = sum_i f_i(x) g_i(y). The x slot is the
 * operator-side variable living on grid_x; the y slot pairs with data /
 * frequency samples and lives on grid_y (canonically the dual of grid_x).
 * An empty term list is the zero symbol.
 */
struct SeparableSymbol {
  struct Term {
    Factor f;
    Factor g;
  };
  Grid grid_x;
  Grid grid_y;
  std::vector<Term> terms;

  int rank() const { return static_cast<int>(terms.size()); }
};

inline SeparableSymbol make_separable(const Grid& grid_x,
                                      std::vector<SeparableSymbol::Term> terms) {
  SeparableSymbol s;
  s.grid_x = grid_x;
  s.grid_y = dual_grid(grid_x);
  s.terms = std::move(terms);
  return s;
}

/// F(x_i, y_j) tabulated on grid_x x grid_y, row-major in the flat indices.
struct DenseSymbol {
  Grid grid_x;
  Grid grid_y;
  std::vector<cxd> values;  // size grid_x.size() * grid_y.size()

  cxd at(std::size_t i, std::size_t j) const {
    return values[i * grid_y.size() + j];
  }
  cxd& at(std::size_t i, std::size_t j) { return values[i * grid_y.size() + j]; }
};

/// Prop-4 normal form: every f-factor h_i has a pdf forward transform p_i.
struct CanonicalSymbol {
  SeparableSymbol sym;
  std::vector<GridFunction> pdfs;  // p_i = F[h_i] on the data-side grid
  bool zero = false;

  int term_count() const { return sym.rank(); }
};

using Symbol = std::variant<SeparableSymbol, DenseSymbol>;

// ---------------------------------------------------------------------------
// evaluation / densification / arithmetic

inline cxd evaluate(const SeparableSymbol& s, const std::array<double, 2>& x,
                    const std::array<double, 2>& y) {
  cxd acc{0, 0};
  for (const auto& t : s.terms)
    acc += factor_eval(t.f, s.grid_x.dim, x) * factor_eval(t.g, s.grid_y.dim, y);
  return acc;
}

inline cxd evaluate(const DenseSymbol& s, const std::array<double, 2>& x,
                    const std::array<double, 2>& y) {
  if (!s.grid_x.contains(x) || !s.grid_y.contains(y))
    throw OutOfDomain("dense symbol evaluated outside its grid box");
  return s.at(s.grid_x.nearest_index(x), s.grid_y.nearest_index(y));
}

inline cxd evaluate(const Symbol& s, const std::array<double, 2>& x,
                    const std::array<double, 2>& y) {
  return std::visit([&](const auto& v) { return evaluate(v, x, y); }, s);
}

inline DenseSymbol densify(const SeparableSymbol& s, const Grid& gx,
                           const Grid& gy) {
  DenseSymbol out;
  out.grid_x = gx;
  out.grid_y = gy;
  const std::size_t nx = gx.size(), ny = gy.size();
  out.values.assign(nx * ny, cxd{0, 0});
  for (const auto& t : s.terms) {
    const auto fv = factor_values(t.f, gx);
    const auto gv = factor_values(t.g, gy);
    parallel_for(0, static_cast<std::int64_t>(nx), [&](std::int64_t i) {
      cxd* row = out.values.data() + static_cast<std::size_t>(i) * ny;
      const cxd fi = fv[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < ny; ++j) row[j] += fi * gv[j];
    });
  }
  return out;
}

inline DenseSymbol densify(const Symbol& s, const Grid& gx, const Grid& gy) {
  if (const auto* sep = std::get_if<SeparableSymbol>(&s))
    return densify(*sep, gx, gy);
  const auto& d = std::get<DenseSymbol>(s);
  if (d.grid_x != gx || d.grid_y != gy)
    throw GridMismatch("dense symbol already lives on different grids");
  return d;
}

inline Symbol add(const Symbol& a, const Symbol& b) {
  if (std::holds_alternative<SeparableSymbol>(a) &&
      std::holds_alternative<SeparableSymbol>(b)) {
    const auto& sa = std::get<SeparableSymbol>(a);
    const auto& sb = std::get<SeparableSymbol>(b);
    if (sa.grid_x != sb.grid_x || sa.grid_y != sb.grid_y)
      throw GridMismatch("cannot add separable symbols on different grids");
    SeparableSymbol out = sa;
    out.terms.insert(out.terms.end(), sb.terms.begin(), sb.terms.end());
    return out;
  }
  auto to_dense = [](const Symbol& s, const Grid& gx, const Grid& gy) {
    return densify(s, gx, gy);
  };
  const Grid gx = std::holds_alternative<DenseSymbol>(a)
                      ? std::get<DenseSymbol>(a).grid_x
                      : std::get<DenseSymbol>(b).grid_x;
  const Grid gy = std::holds_alternative<DenseSymbol>(a)
                      ? std::get<DenseSymbol>(a).grid_y
                      : std::get<DenseSymbol>(b).grid_y;
  DenseSymbol da = to_dense(a, gx, gy);
  const DenseSymbol db = to_dense(b, gx, gy);
  if (da.grid_x != db.grid_x || da.grid_y != db.grid_y)
    throw GridMismatch("cannot add dense symbols on different grids");
  for (std::size_t i = 0; i < da.values.size(); ++i) da.values[i] += db.values[i];
  return da;
}

inline Symbol scale_symbol(const Symbol& s, cxd c) {
  if (const auto* sep = std::get_if<SeparableSymbol>(&s)) {
    SeparableSymbol out = *sep;
    for (auto& t : out.terms) t.f = factor_scale(t.f, c, out.grid_x);
    return out;
  }
  DenseSymbol out = std::get<DenseSymbol>(s);
  for (auto& v : out.values) v *= c;
  return out;
}

inline Symbol subtract(const Symbol& a, const Symbol& b) {
  return add(a, scale_symbol(b, cxd{-1, 0}));
}

// ---------------------------------------------------------------------------
// translation-invariant kernels (profile k, K(s,t) = k(s-t))

/**
 * Builds the rank-1 symbol of a translation-invariant kernel from its
 * profile k sampled on the data-side grid. With gamma the inverse transform
 * of k, the factor is f1 = (2 pi)^(-d/4) sqrt(gamma) and g1 = 1, normalized
 * so that the induced closed-form kernel reproduces k(s-t) exactly.
 * Rejects profiles whose inverse transform has negative lobes.
 */
inline SeparableSymbol from_translation_invariant(const GridFunction& k,
                                                  double tol_neg_rel = 1e-9) {
  const GridFunction gamma = fourier(k, FourierDirection::inverse);
  double amax = 0, min_re = 0, max_im = 0;
  for (const cxd& v : gamma.values) {
    amax = std::max(amax, std::abs(v));
    min_re = std::min(min_re, v.real());
    max_im = std::max(max_im, std::abs(v.imag()));
  }
  const double tol = tol_neg_rel * amax;
  if (min_re < -tol || max_im > tol)
    throw NotPositiveDefinite(
        "inverse transform of the profile has negative or non-real lobes");
  const Grid gx = gamma.grid;
  GridFunction f1(gx);
  const double c = std::pow(kTwoPi, -0.25 * gx.dim);
  for (std::size_t i = 0; i < gamma.values.size(); ++i)
    f1.values[i] = c * std::sqrt(std::max(0.0, gamma.values[i].real()));
  SeparableSymbol out;
  out.grid_x = gx;
  out.grid_y = k.grid;
  out.terms.push_back({Factor(f1), Factor(AnalyticTerm(ConstantTerm{{1, 0}}))});
  return out;
}

// ---------------------------------------------------------------------------
// universality family: grid square root of L = sum_i f_i(D)^dag G f_i(D)

using Polynomial = std::vector<PolyCoeff>;

inline cxd poly_eval(const Polynomial& p, int dim, const std::array<double, 2>& y) {
  cxd acc{0, 0};
  for (const auto& pc : p) {
    double m = 1.0;
    for (int a = 0; a < dim; ++a)
      for (int j = 0; j < pc.alpha[a]; ++j) m *= y[a];
    acc += pc.c * m;
  }
  return acc;
}

/**
 * Symbol of the operator S with S^dag S = L on the grid, where
 * L = sum_i f_i(D)^dag [mult by exp(-|x|^2/(4 eps^2))] f_i(D) and f_i are the
 * supplied polynomials. S is the principal PSD square root of the Hermitian
 * discretization of L; the induced kernel approximates the Gaussian-envelope
 * polynomial feature kernel built from the same f_i.
 */
inline DenseSymbol universality_symbol(double eps,
                                       const std::vector<Polynomial>& polys,
                                       const Grid& grid) {
  if (!(eps > 0)) throw SpecError("eps must be positive");
  if (polys.empty()) throw SpecError("need at least one polynomial");
  int m = 0;
  for (const auto& p : polys)
    for (const auto& pc : p)
      if (std::abs(pc.c) > 0) m = std::max(m, pc.alpha[0] + pc.alpha[1]);
  for (const auto& p : polys) {
    bool has_leading = false;
    for (const auto& pc : p)
      if (pc.alpha[0] + pc.alpha[1] == m && std::abs(pc.c) > 0) has_leading = true;
    if (!has_leading)
      throw SpecError("every polynomial needs a nonzero top-degree coefficient");
  }

  const Grid d = dual_grid(grid);
  const std::size_t n = grid.size();
  const MatrixC U = forward_dft_matrix(grid);
  const MatrixC invU = inverse_dft_matrix(grid);
  Eigen::VectorXd sqrtG(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = grid.point(i);
    const double q = x[0] * x[0] + x[1] * x[1];
    sqrtG[static_cast<Eigen::Index>(i)] = std::exp(-q / (8.0 * eps * eps));
  }

  MatrixC L = MatrixC::Zero(n, n);
  for (const auto& p : polys) {
    VectorC fvals(n);
    for (std::size_t k = 0; k < n; ++k)
      fvals[static_cast<Eigen::Index>(k)] = poly_eval(p, d.dim, d.point(k));
    MatrixC W = invU * (fvals.asDiagonal() * U);
    W = sqrtG.asDiagonal() * W;  // rows scaled by sqrt(G)
    L.noalias() += W.adjoint() * W;
  }
  L = 0.5 * (L + L.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<MatrixC> es(L);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("eigendecomposition of the discretized operator failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  if (lam.minCoeff() < -1e-8 * std::max(lmax, 0.0))
    throw NotPSD("discretized operator has a significantly negative eigenvalue; "
                 "grid too coarse");
  Eigen::VectorXd sq = lam.cwiseMax(0.0).cwiseSqrt();
  const MatrixC S = es.eigenvectors() * sq.asDiagonal() *
                    es.eigenvectors().adjoint();

  // recover the symbol from S = (F o invU-elementwise) * U:
  // F[i,k] = (S invU)[i,k] / invU[i,k]
  const MatrixC SinvU = S * invU;
  DenseSymbol out;
  out.grid_x = grid;
  out.grid_y = d;
  out.values.assign(n * n, cxd{0, 0});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      out.values[i * n + k] =
          SinvU(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) /
          invU(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return out;
}

// ---------------------------------------------------------------------------
// canonicalization (pdf normal form, term count at most 4x)

namespace detail {

// value of f at the lattice reflection of index i (periodic identification)
inline std::size_t reflect_index(const Grid& g, std::size_t flat) {
  const int n = g.points_per_axis;
  if (g.dim == 1) {
    const int j = static_cast<int>(flat);
    return static_cast<std::size_t>((n - j) % n);
  }
  const int j0 = static_cast<int>(flat) / n, j1 = static_cast<int>(flat) % n;
  return static_cast<std::size_t>(((n - j0) % n) * n + ((n - j1) % n));
}

}  // namespace detail

/**
 * Rewrites a separable symbol as sum_i h_i(x) t_i(y) where each F[h_i] is a
 * probability density. Each original term is split into its Hermitian and
 * anti-Hermitian parts (making the transform real) and each part into the
 * positive and negative lobes of its transform with L1 normalization, so the
 * output has at most 4x the input terms. Terms with negligible mass are
 * dropped; a symbol that vanishes entirely comes back with the zero flag.
 */
inline CanonicalSymbol canonicalize(const SeparableSymbol& sym) {
  const Grid& gx = sym.grid_x;
  const Grid gy = dual_grid(gx);

  struct Piece {
    GridFunction pos, neg;  // lobes of the real transform, on gy
    double alpha, beta;
    Factor g;
  };
  std::vector<Piece> pieces;
  double max_mass = 0;

  for (const auto& term : sym.terms) {
    const auto fv = factor_values(term.f, gx);
    GridFunction herm(gx), anti(gx);
    for (std::size_t i = 0; i < fv.size(); ++i) {
      const cxd refl = std::conj(fv[detail::reflect_index(gx, i)]);
      herm.values[i] = 0.5 * (fv[i] + refl);
      anti.values[i] = (fv[i] - herm.values[i]) / cxd{0, 1};
    }
    const cxd part_scale[2] = {cxd{1, 0}, cxd{0, 1}};
    const GridFunction* parts[2] = {&herm, &anti};
    for (int p = 0; p < 2; ++p) {
      GridFunction ft = fourier(*parts[p], FourierDirection::forward);
      double max_im = 0, max_re = 0;
      for (const cxd& v : ft.values) {
        max_im = std::max(max_im, std::abs(v.imag()));
        max_re = std::max(max_re, std::abs(v.real()));
      }
      if (max_im > 1e-9 * std::max(max_re, 1e-300) && max_im > 1e-13)
        throw NumericalError("symmetrized factor has a non-real transform");
      Piece pc{GridFunction(gy), GridFunction(gy), 0, 0,
               factor_scale(term.g, part_scale[p], sym.grid_y)};
      for (std::size_t i = 0; i < ft.values.size(); ++i) {
        const double r = ft.values[i].real();
        pc.pos.values[i] = std::max(r, 0.0);
        pc.neg.values[i] = std::max(-r, 0.0);
      }
      pc.alpha = integrate(pc.pos).real();
      pc.beta = integrate(pc.neg).real();
      max_mass = std::max({max_mass, pc.alpha, pc.beta});
      pieces.push_back(std::move(pc));
    }
  }

  CanonicalSymbol out;
  out.sym.grid_x = gx;
  out.sym.grid_y = gy;
  const double drop_tol = 1e-12 * max_mass;
  for (const auto& pc : pieces) {
    const struct {
      const GridFunction* lobe;
      double mass;
      cxd sign;
    } lobes[2] = {{&pc.pos, pc.alpha, {1, 0}}, {&pc.neg, pc.beta, {-1, 0}}};
    for (const auto& lb : lobes) {
      if (!(lb.mass > drop_tol) || lb.mass == 0.0) continue;
      GridFunction pdf(gy);
      for (std::size_t i = 0; i < pdf.values.size(); ++i)
        pdf.values[i] = lb.lobe->values[i] / lb.mass;
      GridFunction h = fourier(pdf, FourierDirection::inverse);
      out.sym.terms.push_back(
          {Factor(h), factor_scale(pc.g, lb.sign * lb.mass, gy)});
      out.pdfs.push_back(std::move(pdf));
    }
  }
  out.zero = out.sym.terms.empty();
  return out;
}

}  // namespace pdommd
