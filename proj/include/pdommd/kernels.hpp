#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <variant>
#include <vector>

#include "pdommd/spectral.hpp"
#include "pdommd/symbols.hpp"

namespace pdommd {

namespace detail {

// compiled evaluator for T(u) = Int conj(f_i)(x) f_j(x) e^{i x.u} dx when the
// factor product is polynomial x Gaussian:
//   T(u) = e^{i c.u} e^{-w^2|u|^2/2} sum_alpha b_alpha prod_a He_{alpha_a}(w u_a)
// with b_alpha = c_alpha prod_a sqrt(2 pi) w (i w)^{alpha_a}
struct PolyGaussOsc {
  int dim = 1;
  double width = 1.0;
  std::array<double, 2> center{0, 0};
  int max_deg = 0;
  std::vector<PolyCoeff> pref;

  explicit PolyGaussOsc(const PolyGauss& pg, int d) : dim(d), width(pg.width),
                                                      center(pg.center) {
    for (const auto& pc : pg.coeffs) {
      PolyCoeff b = pc;
      for (int a = 0; a < dim; ++a) {
        const cxd iw{0.0, width};
        cxd kap = std::sqrt(kTwoPi) * width;
        for (int j = 0; j < pc.alpha[a]; ++j) kap *= iw;
        b.c *= kap;
        max_deg = std::max(max_deg, pc.alpha[a]);
      }
      // remaining axes beyond dim contribute no factor
      pref.push_back(b);
    }
  }

  cxd operator()(const std::array<double, 2>& u) const {
    double q = 0, phase = 0;
    std::array<std::array<double, 16>, 2> he{};
    for (int a = 0; a < dim; ++a) {
      q += u[a] * u[a];
      phase += center[a] * u[a];
      const double t = width * u[a];
      he[a][0] = 1.0;
      if (max_deg >= 1) he[a][1] = t;
      for (int k = 2; k <= max_deg; ++k)
        he[a][k] = t * he[a][k - 1] - (k - 1) * he[a][k - 2];
    }
    cxd acc{0, 0};
    for (const auto& b : pref) {
      double m = 1.0;
      for (int a = 0; a < dim; ++a) m *= he[a][b.alpha[a]];
      acc += b.c * m;
    }
    return acc * std::polar(std::exp(-0.5 * width * width * q), phase);
  }
};

struct GenericOsc {
  AnalyticTerm term;
  int dim;
  cxd operator()(const std::array<double, 2>& u) const {
    return term_osc_integral(term, dim, u);
  }
};

// direct oscillatory quadrature over the sampled product, exact to the grid
struct GridOsc {
  Grid grid;
  std::vector<cxd> samples;  // conj(f_i) f_j on the grid
  cxd operator()(const std::array<double, 2>& u) const {
    cxd acc{0, 0};
    const std::size_t n = grid.size();
    if (grid.dim == 1) {
      // incremental phase over the uniform lattice
      const cxd step = std::polar(1.0, grid.spacing * u[0]);
      cxd ph = std::polar(1.0, -grid.half_width * u[0]);
      for (std::size_t j = 0; j < n; ++j, ph *= step) acc += samples[j] * ph;
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const auto x = grid.point(j);
        acc += samples[j] * std::polar(1.0, x[0] * u[0] + x[1] * u[1]);
      }
    }
    return acc * grid.cell_weight();
  }
};

using OscEval = std::variant<PolyGaussOsc, GenericOsc, GridOsc>;

inline cxd osc_eval(const OscEval& e, const std::array<double, 2>& u) {
  return std::visit([&](const auto& v) { return v(u); }, e);
}

}  // namespace detail

/**
 * Closed-form kernel of a separable symbol:
 *   K(s,t) = sum_{ij} conj(g_i(s)) g_j(t) T_ij(t-s),
 *   T_ij(u) = Int conj(f_i(x)) f_j(x) e^{i x.u} dx.
 * Pairs whose factor product is Gaussian-type use the analytic transform;
 * anything else falls back to quadrature over the working grid.
 */
struct ClosedKernel {
  int dim = 1;
  Grid grid_y;  // data-side grid, used by grid-backed g factors
  std::vector<Factor> g;
  std::vector<detail::OscEval> pair;  // row-major (i,j)

  cxd operator()(const std::array<double, 2>& s,
                 const std::array<double, 2>& t) const {
    const std::array<double, 2> u{t[0] - s[0], t[1] - s[1]};
    const int l = static_cast<int>(g.size());
    cxd acc{0, 0};
    for (int i = 0; i < l; ++i) {
      const cxd gi = std::conj(factor_eval(g[i], dim, s));
      if (gi == cxd{0, 0}) continue;
      for (int j = 0; j < l; ++j) {
        const cxd gj = factor_eval(g[j], dim, t);
        if (gj == cxd{0, 0}) continue;
        acc += gi * gj * detail::osc_eval(pair[i * l + j], u);
      }
    }
    return acc;
  }
};

struct GridMatrixKernel {
  Grid grid;  // data-side grid indexing rows and columns
  MatrixC entries;

  cxd operator()(const std::array<double, 2>& s,
                 const std::array<double, 2>& t) const {
    if (!grid.contains(s) || !grid.contains(t))
      throw OutOfDomain("kernel evaluated outside the grid box");
    return entries(static_cast<Eigen::Index>(grid.nearest_index(s)),
                   static_cast<Eigen::Index>(grid.nearest_index(t)));
  }
};

using KernelForm = std::variant<ClosedKernel, GridMatrixKernel>;

inline cxd kernel_eval(const KernelForm& k, const std::array<double, 2>& s,
                       const std::array<double, 2>& t) {
  return std::visit([&](const auto& v) { return v(s, t); }, k);
}

inline KernelForm kernel_closed(const SeparableSymbol& sym) {
  ClosedKernel out;
  out.dim = sym.grid_x.dim;
  out.grid_y = sym.grid_y;
  const int l = sym.rank();
  for (const auto& t : sym.terms) out.g.push_back(t.g);
  out.pair.reserve(static_cast<std::size_t>(l) * l);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      const Factor& fi = sym.terms[i].f;
      const Factor& fj = sym.terms[j].f;
      const auto* ti = std::get_if<AnalyticTerm>(&fi);
      const auto* tj = std::get_if<AnalyticTerm>(&fj);
      bool done = false;
      if (ti && tj) {
        if (auto prod = product_conj_closed(*ti, *tj, out.dim)) {
          if (const auto* pg = std::get_if<PolyGauss>(&*prod)) {
            int md = 0;
            for (const auto& pc : pg->coeffs)
              md = std::max({md, pc.alpha[0], pc.alpha[1]});
            if (md < 16) {
              out.pair.emplace_back(detail::PolyGaussOsc(*pg, out.dim));
              done = true;
            }
          } else if (std::holds_alternative<ConstantTerm>(*prod) ||
                     std::holds_alternative<Poly>(*prod)) {
            throw TransformUnavailable(
                "factor product does not decay; no kernel transform exists");
          } else {
            out.pair.emplace_back(detail::GenericOsc{*prod, out.dim});
            done = true;
          }
        }
      }
      if (!done) {
        auto nondecaying = [](const AnalyticTerm* t) {
          return t && (std::holds_alternative<ConstantTerm>(*t) ||
                       std::holds_alternative<Poly>(*t));
        };
        if (nondecaying(ti) && nondecaying(tj))
          throw TransformUnavailable(
              "factor product does not decay; no kernel transform exists");
        detail::GridOsc go;
        go.grid = sym.grid_x;
        const auto fvi = factor_values(fi, sym.grid_x);
        const auto fvj = factor_values(fj, sym.grid_x);
        go.samples.resize(fvi.size());
        for (std::size_t m = 0; m < fvi.size(); ++m)
          go.samples[m] = std::conj(fvi[m]) * fvj[m];
        out.pair.emplace_back(std::move(go));
      }
    }
  }
  return out;
}

/**
 * Grid kernel through the operator composition: with B the pdo_xd matrix,
 * K = (2 pi)^d / w_f * DFT B^dag B invDFT, Hermitian PSD by construction and
 * indexed by the data-side (dual) lattice.
 */
inline KernelForm kernel_grid(const Symbol& sym, const Grid& grid) {
  const OperatorMatrix B = build_operator(sym, OperatorKind::pdo_xd, grid);
  const MatrixC U = forward_dft_matrix(grid);
  const MatrixC invU = inverse_dft_matrix(grid);
  const Grid d = dual_grid(grid);
  GridMatrixKernel out;
  out.grid = d;
  const double scale = std::pow(kTwoPi, grid.dim) / d.cell_weight();
  out.entries = scale * (U * (B.entries.adjoint() * B.entries) * invU);
  out.entries = 0.5 * (out.entries + out.entries.adjoint()).eval();
  return out;
}

inline KernelForm kernel_grid(const Symbol& sym) {
  const Grid g = std::visit([](const auto& s) { return s.grid_x; }, sym);
  return kernel_grid(sym, g);
}

struct GramMatrix {
  int dim = 1;
  std::vector<std::array<double, 2>> points;
  MatrixC entries;
};

inline GramMatrix gram(const KernelForm& kernel,
                       const std::vector<std::array<double, 2>>& points,
                       int dim) {
  GramMatrix out;
  out.dim = dim;
  out.points = points;
  const std::size_t n = points.size();
  out.entries.resize(n, n);
  parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t a) {
    for (std::size_t b = static_cast<std::size_t>(a); b < n; ++b) {
      const cxd v = kernel_eval(kernel, points[static_cast<std::size_t>(a)],
                                points[b]);
      out.entries(a, static_cast<Eigen::Index>(b)) = v;
      out.entries(static_cast<Eigen::Index>(b), a) = std::conj(v);
    }
  });
  return out;
}

struct PsdReport {
  double min_eig = 0;
  double max_eig = 0;
  bool pass = true;
};

inline PsdReport psd_check(const GramMatrix& g, double tol_rel = 1e-8) {
  PsdReport out;
  if (g.entries.rows() == 0) return out;
  const MatrixC H = 0.5 * (g.entries + g.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixC> es(H, Eigen::EigenvaluesOnly);
  out.min_eig = es.eigenvalues().minCoeff();
  out.max_eig = es.eigenvalues().maxCoeff();
  out.pass = out.min_eig >= -tol_rel * std::max(out.max_eig, 0.0);
  return out;
}

}  // namespace pdommd
