#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pdommd/kernels.hpp"
#include "pdommd/symbols.hpp"

namespace pdommd {

struct SampleSet {
  int dim = 1;
  std::vector<std::array<double, 2>> points;
  std::uint64_t seed = 0;  // provenance, informational

  std::size_t size() const { return points.size(); }
};

enum class MmdMethod { gram_v, gram_u, spectral, density_grid };

inline const char* to_string(MmdMethod m) {
  switch (m) {
    case MmdMethod::gram_v: return "gram_v";
    case MmdMethod::gram_u: return "gram_u";
    case MmdMethod::spectral: return "spectral";
    default: return "density_grid";
  }
}

struct MmdEstimate {
  double value = 0;    // the distance, sqrt(max(squared, 0))
  double squared = 0;  // the quadratic functional
  MmdMethod method = MmdMethod::spectral;
  std::size_t n_u = 0, n_v = 0;
  Grid grid;
  bool grid_too_coarse = false;  // aliasing risk flag for sample estimators
};

// ---------------------------------------------------------------------------
// weighted empirical characteristic functions

/// phi(x) = (1/N) sum_k g(Y_k) e^{i x . Y_k} on the given grid, evaluated with
/// a per-axis phase recursion over the uniform lattice.
inline GridFunction weighted_char_fn(const SampleSet& s, const Factor& g,
                                     const Grid& grid) {
  const std::size_t n = grid.size();
  const int npa = grid.points_per_axis;
  const std::size_t ns = s.points.size();
  if (ns == 0) throw SpecError("sample set is empty");

  const int nt = std::min(max_threads(), 8);
  const std::size_t chunk = (ns + nt - 1) / nt;
  std::vector<std::vector<cxd>> partial(nt, std::vector<cxd>(n, cxd{0, 0}));

  parallel_blocks(nt, [&](int block) {
    const std::size_t lo = block * chunk, hi = std::min(ns, lo + chunk);
    auto& acc = partial[static_cast<std::size_t>(block)];
    std::vector<cxd> ph0(npa), ph1(npa);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& y = s.points[k];
      const cxd gv = factor_eval(g, s.dim, y);
      const cxd step0 = std::polar(1.0, grid.spacing * y[0]);
      cxd p = std::polar(1.0, -grid.half_width * y[0]);
      for (int j = 0; j < npa; ++j, p *= step0) ph0[j] = p;
      if (grid.dim == 1) {
        for (int j = 0; j < npa; ++j) acc[j] += gv * ph0[j];
      } else {
        const cxd step1 = std::polar(1.0, grid.spacing * y[1]);
        cxd q = std::polar(1.0, -grid.half_width * y[1]);
        for (int j = 0; j < npa; ++j, q *= step1) ph1[j] = q;
        for (int j0 = 0; j0 < npa; ++j0) {
          const cxd a = gv * ph0[j0];
          cxd* row = acc.data() + static_cast<std::size_t>(j0) * npa;
          for (int j1 = 0; j1 < npa; ++j1) row[j1] += a * ph1[j1];
        }
      }
    }
  });

  GridFunction out(grid);
  for (int b = 0; b < nt; ++b)
    for (std::size_t i = 0; i < n; ++i) out.values[i] += partial[b][i];
  const double inv = 1.0 / static_cast<double>(ns);
  for (auto& v : out.values) v *= inv;
  check_finite(out, "weighted_char_fn");
  return out;
}

namespace detail {

inline double max_sample_radius(const SampleSet& s) {
  double r = 0;
  for (const auto& p : s.points)
    for (int a = 0; a < s.dim; ++a) r = std::max(r, std::abs(p[a]));
  return r;
}

// integrand of the spectral functional: sum_i f_i(x) (phi_i^u - phi_i^v)(x)
inline GridFunction spectral_integrand(const SampleSet& su, const SampleSet& sv,
                                       const SeparableSymbol& sym,
                                       const Grid& grid) {
  GridFunction w(grid);
  for (const auto& term : sym.terms) {
    const GridFunction pu = weighted_char_fn(su, term.g, grid);
    const GridFunction pv = weighted_char_fn(sv, term.g, grid);
    const auto fv = factor_values(term.f, grid);
    for (std::size_t i = 0; i < w.values.size(); ++i)
      w.values[i] += fv[i] * (pu.values[i] - pv.values[i]);
  }
  return w;
}

}  // namespace detail

/// MMD as the quadrature L2 norm of sum_i f_i (phi_i^u - phi_i^v).
inline MmdEstimate mmd_spectral(const SampleSet& su, const SampleSet& sv,
                                const SeparableSymbol& sym, const Grid& grid) {
  if (su.dim != sv.dim) throw SpecError("sample sets have different dimensions");
  MmdEstimate out;
  out.method = MmdMethod::spectral;
  out.n_u = su.size();
  out.n_v = sv.size();
  out.grid = grid;
  const double radius =
      std::max(detail::max_sample_radius(su), detail::max_sample_radius(sv));
  out.grid_too_coarse = radius * grid.spacing > kPi / 4.0;
  const GridFunction w = detail::spectral_integrand(su, sv, sym, grid);
  double sq = 0;
  for (const cxd& v : w.values) sq += std::norm(v);
  out.squared = sq * grid.cell_weight();
  out.value = std::sqrt(std::max(out.squared, 0.0));
  return out;
}

enum class GramStatistic { v, u };

/// Gram-form estimator: mean K(X,X') + mean K(Y,Y') - 2 Re mean K(X,Y).
inline MmdEstimate mmd_gram(const SampleSet& su, const SampleSet& sv,
                            const KernelForm& kernel, GramStatistic stat) {
  const std::size_t n = su.size(), m = sv.size();
  if (n == 0 || m == 0) throw SpecError("sample set is empty");
  if (stat == GramStatistic::u && (n < 2 || m < 2))
    throw SpecError("u-statistic needs at least two samples per set");

  // block-partitioned sums combined in fixed order
  auto self_sum = [&](const SampleSet& s, double& diag, double& offdiag) {
    const std::size_t ns = s.size();
    const int nt = std::min(max_threads(), 8);
    const std::size_t chunk = (ns + nt - 1) / nt;
    std::vector<double> pd(nt, 0.0), po(nt, 0.0);
    parallel_blocks(nt, [&](int b) {
      const std::size_t lo = b * chunk, hi = std::min(ns, lo + chunk);
      double d = 0, o = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        d += kernel_eval(kernel, s.points[i], s.points[i]).real();
        for (std::size_t j = i + 1; j < ns; ++j)
          o += kernel_eval(kernel, s.points[i], s.points[j]).real();
      }
      pd[static_cast<std::size_t>(b)] = d;
      po[static_cast<std::size_t>(b)] = o;
    });
    diag = 0;
    offdiag = 0;
    for (int b = 0; b < nt; ++b) {
      diag += pd[b];
      offdiag += po[b];
    }
  };
  auto cross_sum = [&] {
    const int nt = std::min(max_threads(), 8);
    const std::size_t chunk = (n + nt - 1) / nt;
    std::vector<double> pc(nt, 0.0);
    parallel_blocks(nt, [&](int b) {
      const std::size_t lo = b * chunk, hi = std::min(n, lo + chunk);
      double c = 0;
      for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t j = 0; j < m; ++j)
          c += kernel_eval(kernel, su.points[i], sv.points[j]).real();
      pc[static_cast<std::size_t>(b)] = c;
    });
    double c = 0;
    for (int b = 0; b < nt; ++b) c += pc[b];
    return c;
  };

  double du, ou, dv, ov;
  self_sum(su, du, ou);
  self_sum(sv, dv, ov);
  const double cross = cross_sum();

  MmdEstimate out;
  out.method = stat == GramStatistic::v ? MmdMethod::gram_v : MmdMethod::gram_u;
  out.n_u = n;
  out.n_v = m;
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  if (stat == GramStatistic::v) {
    out.squared = (du + 2 * ou) / (nn * nn) + (dv + 2 * ov) / (mm * mm) -
                  2.0 * cross / (nn * mm);
    if (out.squared < 0 && out.squared > -1e-12) out.squared = 0;
  } else {
    out.squared = 2 * ou / (nn * (nn - 1)) + 2 * ov / (mm * (mm - 1)) -
                  2.0 * cross / (nn * mm);
  }
  out.value = std::sqrt(std::max(out.squared, 0.0));
  return out;
}

/// Deterministic quadrature MMD between gridded densities; the oracle the
/// sample estimators converge to.
inline MmdEstimate mmd_density(const GridFunction& u, const GridFunction& v,
                               const Symbol& sym) {
  if (u.grid != v.grid) throw GridMismatch("densities on different grids");
  auto validate = [](const GridFunction& p) {
    double mx = 0;
    for (const cxd& z : p.values) mx = std::max(mx, std::abs(z));
    for (const cxd& z : p.values) {
      if (std::abs(z.imag()) > 1e-9 * std::max(mx, 1e-300))
        throw NotADensity("density has an imaginary part");
      if (z.real() < -1e-9 * std::max(mx, 1e-300))
        throw NotADensity("density has a negative value");
    }
    const double mass = integrate(p).real();
    if (std::abs(mass - 1.0) > 1e-6)
      throw NotADensity("density mass " + std::to_string(mass) +
                        " is not 1 within 1e-6");
  };
  validate(u);
  validate(v);

  MmdEstimate out;
  out.method = MmdMethod::density_grid;
  const Grid data = u.grid;
  const Grid xg = dual_grid(data);
  out.grid = xg;

  GridFunction diff(data);
  for (std::size_t i = 0; i < diff.values.size(); ++i)
    diff.values[i] = u.values[i] - v.values[i];

  double sq = 0;
  if (const auto* sep = std::get_if<SeparableSymbol>(&sym)) {
    if (sep->grid_x != xg)
      throw GridMismatch("symbol x-grid is not dual to the density grid");
    GridFunction w(xg);
    const double c = std::pow(kTwoPi, 0.5 * data.dim);
    for (const auto& term : sep->terms) {
      GridFunction gd(data);
      const auto gv = factor_values(term.g, data);
      for (std::size_t i = 0; i < gd.values.size(); ++i)
        gd.values[i] = gv[i] * diff.values[i];
      GridFunction phi = fourier(gd, FourierDirection::inverse);
      const auto fv = factor_values(term.f, xg);
      for (std::size_t i = 0; i < w.values.size(); ++i)
        w.values[i] += fv[i] * c * phi.values[i];
    }
    for (const cxd& z : w.values) sq += std::norm(z);
    sq *= xg.cell_weight();
  } else {
    const auto& d = std::get<DenseSymbol>(sym);
    if (d.grid_y != data || d.grid_x != xg)
      throw GridMismatch("dense symbol grids do not match the density grid");
    const std::size_t nx = xg.size(), ny = data.size();
    const double wf = data.cell_weight();
    std::vector<double> partial(nx, 0.0);
    parallel_for(0, static_cast<std::int64_t>(nx), [&](std::int64_t i) {
      const auto x = xg.point(static_cast<std::size_t>(i));
      cxd acc{0, 0};
      for (std::size_t k = 0; k < ny; ++k) {
        const auto y = data.point(k);
        acc += d.values[static_cast<std::size_t>(i) * ny + k] * diff.values[k] *
               std::polar(1.0, x[0] * y[0] + x[1] * y[1]);
      }
      partial[static_cast<std::size_t>(i)] = std::norm(acc * wf);
    });
    for (double p : partial) sq += p;
    sq *= xg.cell_weight();
  }
  out.squared = sq;
  out.value = std::sqrt(std::max(sq, 0.0));
  return out;
}

// ---------------------------------------------------------------------------
// witness / critic

struct WitnessFunction {
  GridFunction fstar;     // unit quadrature-L2 norm, on the operator-side grid
  double objective = 0;   // equals the spectral MMD value
};

inline WitnessFunction witness(const SampleSet& su, const SampleSet& sv,
                               const SeparableSymbol& sym, const Grid& grid) {
  GridFunction w = detail::spectral_integrand(su, sv, sym, grid);
  const double n2 = norm(w, NormKind::l2);
  if (n2 <= 1e-14)
    throw DegenerateWitness("distributions are indistinguishable for this symbol");
  WitnessFunction out;
  out.fstar = w;
  for (auto& v : out.fstar.values) v /= n2;
  out.objective = n2;
  return out;
}

// ---------------------------------------------------------------------------
// local moments

namespace detail {

// multilinear interpolation of p at an arbitrary point, 0 outside the box
inline double interp_pdf(const GridFunction& p, const std::array<double, 2>& t) {
  const Grid& g = p.grid;
  double acc = 0;
  if (g.dim == 1) {
    const double s = (t[0] + g.half_width) / g.spacing;
    const int j = static_cast<int>(std::floor(s));
    const double a = s - j;
    auto val = [&](int idx) -> double {
      return (idx >= 0 && idx < g.points_per_axis)
                 ? p.values[static_cast<std::size_t>(idx)].real()
                 : 0.0;
    };
    acc = (1 - a) * val(j) + a * val(j + 1);
  } else {
    const double s0 = (t[0] + g.half_width) / g.spacing;
    const double s1 = (t[1] + g.half_width) / g.spacing;
    const int j0 = static_cast<int>(std::floor(s0));
    const int j1 = static_cast<int>(std::floor(s1));
    const double a0 = s0 - j0, a1 = s1 - j1;
    auto val = [&](int i0, int i1) -> double {
      if (i0 < 0 || i0 >= g.points_per_axis || i1 < 0 || i1 >= g.points_per_axis)
        return 0.0;
      return p.values[static_cast<std::size_t>(i0) * g.points_per_axis + i1]
          .real();
    };
    acc = (1 - a0) * ((1 - a1) * val(j0, j1) + a1 * val(j0, j1 + 1)) +
          a0 * ((1 - a1) * val(j0 + 1, j1) + a1 * val(j0 + 1, j1 + 1));
  }
  return std::max(acc, 0.0);
}

}  // namespace detail

/**
 * m(t, u) = E[conj(g)(x) | x + eps = t] for noise eps ~ p, with u given as a
 * gridded density. t is snapped to the lattice so every pdf lookup stays
 * on-grid and the quadrature keeps spectral accuracy.
 */
inline cxd local_moment(const std::array<double, 2>& t, const GridFunction& u,
                        const Factor& g, const GridFunction& p,
                        double den_tol = 1e-12) {
  const Grid& grid = u.grid;
  if (p.grid != grid) throw GridMismatch("noise pdf lives on a different grid");
  if (!grid.contains(t)) throw UnsupportedPoint("t outside the density grid");
  const int npa = grid.points_per_axis;
  const std::size_t n = grid.size();
  const std::size_t ti = grid.nearest_index(t);
  const int t0 = static_cast<int>(ti) / (grid.dim == 1 ? 1 : npa);
  const int t1 = grid.dim == 1 ? 0 : static_cast<int>(ti) % npa;
  cxd num{0, 0};
  double den = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const int k0 = grid.dim == 1 ? static_cast<int>(k) : static_cast<int>(k) / npa;
    const int k1 = grid.dim == 1 ? 0 : static_cast<int>(k) % npa;
    const int o0 = t0 - k0 + npa / 2;
    const int o1 = grid.dim == 1 ? 0 : t1 - k1 + npa / 2;
    if (o0 < 0 || o0 >= npa || (grid.dim == 2 && (o1 < 0 || o1 >= npa))) continue;
    const std::size_t pi =
        grid.dim == 1 ? static_cast<std::size_t>(o0)
                      : static_cast<std::size_t>(o0) * npa + o1;
    const double pv = p.values[pi].real();
    if (pv == 0.0) continue;
    const double uv = u.values[k].real();
    const auto y = grid.point(k);
    num += std::conj(factor_eval(g, grid.dim, y)) * uv * pv;
    den += uv * pv;
  }
  const double w = grid.cell_weight();
  num *= w;
  den *= w;
  if (den < den_tol)
    throw UnsupportedPoint("t outside the effective support of the density");
  return num / den;
}

/// Sample form: integrals replaced by sums over the samples; the noise pdf is
/// interpolated at the off-lattice offsets t - Y_k.
inline cxd local_moment(const std::array<double, 2>& t, const SampleSet& s,
                        const Factor& g, const GridFunction& p,
                        double den_tol = 1e-12) {
  cxd num{0, 0};
  double den = 0;
  for (const auto& y : s.points) {
    const std::array<double, 2> off{t[0] - y[0], t[1] - y[1]};
    const double pv = detail::interp_pdf(p, off);
    if (pv == 0.0) continue;
    num += std::conj(factor_eval(g, s.dim, y)) * pv;
    den += pv;
  }
  const double inv = 1.0 / static_cast<double>(s.size());
  num *= inv;
  den *= inv;
  if (den < den_tol)
    throw UnsupportedPoint("t outside the effective support of the samples");
  return num / den;
}

/// Per-term local-moment difference fields m_i(., u) - m_i(., v) over the data
/// lattice; lattice points with an undefined denominator are masked out.
struct MomentField {
  GridFunction diff;
  std::vector<std::uint8_t> defined;
};

inline std::vector<MomentField> moment_field(const SampleSet& su,
                                             const SampleSet& sv,
                                             const CanonicalSymbol& canon,
                                             const Grid& data_grid,
                                             double den_tol = 1e-12) {
  if (canon.term_count() < 1)
    throw SpecError("canonical symbol has no terms");
  std::vector<MomentField> out;
  for (int i = 0; i < canon.term_count(); ++i) {
    const GridFunction& p = canon.pdfs[static_cast<std::size_t>(i)];
    if (p.grid != data_grid)
      throw GridMismatch("canonical pdfs live on a different grid");
    const Factor& g = canon.sym.terms[static_cast<std::size_t>(i)].g;
    MomentField field{GridFunction(data_grid), {}};
    field.defined.assign(data_grid.size(), 0);
    const std::size_t n = data_grid.size();
    parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t k) {
      const auto t = data_grid.point(static_cast<std::size_t>(k));
      try {
        const cxd mu = local_moment(t, su, g, p, den_tol);
        const cxd mv = local_moment(t, sv, g, p, den_tol);
        field.diff.values[static_cast<std::size_t>(k)] = mu - mv;
        field.defined[static_cast<std::size_t>(k)] = 1;
      } catch (const UnsupportedPoint&) {
        // masked
      }
    });
    out.push_back(std::move(field));
  }
  return out;
}

// ---------------------------------------------------------------------------
// feature registry used by CLI configs: const, coord_k, poly:<coeffs>, hermite:<n>

inline Factor parse_feature(const std::string& name) {
  if (name == "const") return Factor(AnalyticTerm(ConstantTerm{{1, 0}}));
  if (name.rfind("coord_", 0) == 0) {
    const int k = std::stoi(name.substr(6));
    if (k != 0 && k != 1) throw UsageError("coord axis must be 0 or 1");
    Poly p;
    MultiIndex a{0, 0};
    a[k] = 1;
    p.coeffs.push_back({a, cxd{1, 0}});
    return Factor(AnalyticTerm(p));
  }
  if (name.rfind("poly:", 0) == 0) {
    Poly p;
    std::string rest = name.substr(5);
    int deg = 0;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t next = rest.find(',', pos);
      if (next == std::string::npos) next = rest.size();
      const double c = std::stod(rest.substr(pos, next - pos));
      if (c != 0.0) p.coeffs.push_back({{deg, 0}, cxd{c, 0}});
      ++deg;
      pos = next + 1;
    }
    if (p.coeffs.empty()) p.coeffs.push_back({{0, 0}, cxd{0, 0}});
    return Factor(AnalyticTerm(p));
  }
  if (name.rfind("hermite:", 0) == 0) {
    const int deg = std::stoi(name.substr(8));
    if (deg < 0 || deg > 12) throw UsageError("hermite degree must be in [0,12]");
    Poly p;
    const auto hc = detail::hermite_coeffs(deg);
    for (std::size_t j = 0; j < hc.size(); ++j)
      if (hc[j] != 0.0)
        p.coeffs.push_back({{static_cast<int>(j), 0}, cxd{hc[j], 0}});
    return Factor(AnalyticTerm(p));
  }
  throw UsageError("unknown feature '" + name +
                   "'; expected const, coord_k, poly:<coeffs>, hermite:<n>");
}

}  // namespace pdommd
