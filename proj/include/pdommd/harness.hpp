#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdommd/fit.hpp"
#include "pdommd/mmd.hpp"
#include "pdommd/rng.hpp"
#include "pdommd/spectral.hpp"

namespace pdommd {

// ---------------------------------------------------------------------------
// instances

struct GaussianMixture {
  struct Component {
    double weight = 1.0;
    std::array<double, 2> mean{0, 0};
    double variance = 1.0;  // isotropic per axis
  };
  int dim = 1;
  std::vector<Component> comps;

  GridFunction pdf(const Grid& g) const {
    GridFunction out(g);
    for (const auto& c : comps) {
      const double inv2v = 1.0 / (2.0 * c.variance);
      const double nrm =
          c.weight * std::pow(kTwoPi * c.variance, -0.5 * dim);
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        const auto p = g.point(i);
        double q = 0;
        for (int a = 0; a < dim; ++a) {
          const double d = p[a] - c.mean[a];
          q += d * d;
        }
        out.values[i] += nrm * std::exp(-q * inv2v);
      }
    }
    return out;
  }

  std::array<double, 2> mean() const {
    std::array<double, 2> m{0, 0};
    for (const auto& c : comps)
      for (int a = 0; a < dim; ++a) m[a] += c.weight * c.mean[a];
    return m;
  }

  SampleSet draw(std::size_t n, Rng& rng) const {
    SampleSet out;
    out.dim = dim;
    out.points.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      double u = rng.uniform();
      std::size_t pick = comps.size() - 1;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        if (u <= comps[c].weight) {
          pick = c;
          break;
        }
        u -= comps[c].weight;
      }
      const double sd = std::sqrt(comps[pick].variance);
      std::array<double, 2> p{0, 0};
      for (int a = 0; a < dim; ++a)
        p[a] = comps[pick].mean[a] + sd * rng.normal();
      out.points[k] = p;
    }
    return out;
  }
};

enum class SymbolFamily {
  separable_gauss_hermite,
  dense_gaussian_envelope,
  translation_invariant
};

struct InstanceSpec {
  int dim = 1;
  int rank_lo = 1;
  int rank_hi = 3;
  int mixture_components = 2;
  SymbolFamily family = SymbolFamily::separable_gauss_hermite;
  std::optional<Grid> grid;  // default desk-scale grid when absent
};

struct Instance {
  std::uint64_t seed = 0;
  Grid grid;
  Symbol symbol;
  GaussianMixture u, v;
};

namespace detail {

inline GaussianMixture random_mixture(Rng& rng, int dim, int comps) {
  GaussianMixture m;
  m.dim = dim;
  double total = 0;
  for (int c = 0; c < comps; ++c) {
    GaussianMixture::Component cc;
    cc.weight = rng.uniform(0.5, 1.5);
    for (int a = 0; a < dim; ++a) cc.mean[a] = rng.uniform(-3.0, 3.0);
    cc.variance = rng.uniform(0.05, 1.0);
    total += cc.weight;
    m.comps.push_back(cc);
  }
  for (auto& cc : m.comps) cc.weight /= total;
  return m;
}

inline Factor random_feature(Rng& rng, int dim) {
  switch (rng.uniform_int(0, 2)) {
    case 0:
      return Factor(AnalyticTerm(ConstantTerm{{rng.uniform(0.5, 1.5), 0}}));
    case 1: {
      GaussHermite gh;
      gh.degree = rng.uniform_int(0, 2);
      gh.width = rng.uniform(1.5, 4.0);
      gh.center[0] = rng.uniform(-1.0, 1.0);
      if (dim == 2) gh.center[1] = rng.uniform(-1.0, 1.0);
      gh.scale = {rng.uniform(0.5, 1.5), 0};
      return Factor(AnalyticTerm(gh));
    }
    default: {
      Poly p;
      p.coeffs.push_back({{0, 0}, cxd{rng.uniform(-1.0, 1.0), 0}});
      p.coeffs.push_back({{1, 0}, cxd{rng.uniform(-0.3, 0.3), 0}});
      return Factor(AnalyticTerm(p));
    }
  }
}

inline SeparableSymbol random_separable(Rng& rng, const Grid& grid, int rank_lo,
                                        int rank_hi) {
  SeparableSymbol sym;
  sym.grid_x = grid;
  sym.grid_y = dual_grid(grid);
  const int l = rng.uniform_int(rank_lo, rank_hi);
  for (int t = 0; t < l; ++t) {
    GaussHermite f;
    f.degree = rng.uniform_int(0, 3);
    f.width = rng.uniform(0.8, 1.6);
    f.center[0] = rng.uniform(-1.5, 1.5);
    if (grid.dim == 2) f.center[1] = rng.uniform(-1.5, 1.5);
    f.scale = {rng.uniform(0.4, 1.2), 0};
    sym.terms.push_back({Factor(AnalyticTerm(f)), random_feature(rng, grid.dim)});
  }
  return sym;
}

inline DenseSymbol random_dense_envelope(Rng& rng, const Grid& grid) {
  const Grid d = dual_grid(grid);
  const double a = rng.uniform(0.3, 0.7);
  const double b = rng.uniform(0.3, 0.7);
  const double rho = rng.uniform(0.3, 0.8) * 2.0 * std::sqrt(a * b);
  const double c0 = rng.uniform(0.5, 1.5);
  const double c1 = rng.uniform(-0.3, 0.3);
  DenseSymbol out;
  out.grid_x = grid;
  out.grid_y = d;
  const std::size_t nx = grid.size(), ny = d.size();
  out.values.resize(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    const auto x = grid.point(i);
    for (std::size_t j = 0; j < ny; ++j) {
      const auto y = d.point(j);
      double qx = 0, qy = 0, xy = 0;
      for (int ax = 0; ax < grid.dim; ++ax) {
        qx += x[ax] * x[ax];
        qy += y[ax] * y[ax];
        xy += x[ax] * y[ax];
      }
      out.values[i * ny + j] =
          (c0 + c1 * x[0]) * std::exp(-a * qx - b * qy + rho * xy);
    }
  }
  return out;
}

inline SeparableSymbol random_translation_invariant(Rng& rng, const Grid& grid) {
  GridFunction gamma(grid);
  const int comps = rng.uniform_int(1, 3);
  for (int c = 0; c < comps; ++c) {
    const double w = rng.uniform(0.3, 1.0);
    const double ctr = rng.uniform(-2.0, 2.0);
    const double s = rng.uniform(0.6, 2.0);
    for (std::size_t i = 0; i < gamma.values.size(); ++i) {
      const auto p = grid.point(i);
      double q = 0;
      for (int a = 0; a < grid.dim; ++a) {
        const double dd = p[a] - (a == 0 ? ctr : 0.0);
        q += dd * dd;
      }
      gamma.values[i] += w * std::exp(-q / (2 * s * s));
    }
  }
  const GridFunction k = fourier(gamma, FourierDirection::forward);
  return from_translation_invariant(k);
}

}  // namespace detail

inline Instance generate_instance(std::uint64_t seed, const InstanceSpec& spec) {
  if (spec.dim != 1 && spec.dim != 2) throw SpecError("instance dim must be 1 or 2");
  if (spec.rank_lo < 1 || spec.rank_hi < spec.rank_lo)
    throw SpecError("invalid rank range");
  if (spec.mixture_components < 1) throw SpecError("need at least one component");
  Instance inst;
  inst.seed = seed;
  inst.grid = spec.grid ? *spec.grid : default_grid(spec.dim);
  Rng rng(seed);
  switch (spec.family) {
    case SymbolFamily::separable_gauss_hermite:
      inst.symbol = detail::random_separable(rng, inst.grid, spec.rank_lo,
                                             spec.rank_hi);
      break;
    case SymbolFamily::dense_gaussian_envelope:
      inst.symbol = detail::random_dense_envelope(rng, inst.grid);
      break;
    case SymbolFamily::translation_invariant:
      inst.symbol = detail::random_translation_invariant(rng, inst.grid);
      break;
  }
  inst.u = detail::random_mixture(rng, spec.dim, spec.mixture_components);
  inst.v = detail::random_mixture(rng, spec.dim, spec.mixture_components);
  // keep the pair distinguishable so relative comparisons are well-scaled
  const auto mu = inst.u.mean(), mv = inst.v.mean();
  double sep = 0;
  for (int a = 0; a < spec.dim; ++a) sep += std::abs(mu[a] - mv[a]);
  if (sep < 0.5) inst.v.comps[0].mean[0] += 1.0;
  return inst;
}

// ---------------------------------------------------------------------------
// checks

enum class CheckId {
  triangle,
  lipschitz,
  trunc_2inf,
  trunc_hs,
  diag,
  hs_eq,
  dual_norm_bound,
  shifted
};

inline const char* to_string(CheckId c) {
  switch (c) {
    case CheckId::triangle: return "triangle";
    case CheckId::lipschitz: return "lipschitz";
    case CheckId::trunc_2inf: return "trunc_2inf";
    case CheckId::trunc_hs: return "trunc_hs";
    case CheckId::diag: return "diag";
    case CheckId::hs_eq: return "hs_eq";
    case CheckId::dual_norm_bound: return "dual_norm_bound";
    default: return "shifted";
  }
}

inline CheckId check_from_string(const std::string& s) {
  for (CheckId c : {CheckId::triangle, CheckId::lipschitz, CheckId::trunc_2inf,
                    CheckId::trunc_hs, CheckId::diag, CheckId::hs_eq,
                    CheckId::dual_norm_bound, CheckId::shifted})
    if (s == to_string(c)) return c;
  throw UsageError("unknown check '" + s + "'");
}

struct TrialRecord {
  std::uint64_t seed = 0;
  double lhs = 0, rhs = 0, margin = 0;
  bool pass = true;
  std::string note;  // error text or anomaly flags, empty when clean
};

struct CheckReport {
  std::string check;
  int trials = 0;
  int violations = 0;
  double worst_margin = 0;
  double empirical_constant = 0;
  std::vector<std::uint64_t> seeds;
  double runtime_ms = 0;
  std::vector<TrialRecord> records;
  bool informational = false;  // "shifted" reports ratios, never fails
};

namespace detail {

// symbol scale used by the check tolerance (HS norm of the symbol)
inline double symbol_hs_scale(const Symbol& sym) {
  const SvdResult svd = symbol_svd(sym);
  return std::sqrt(tail_sum(svd, 0, 2));
}

inline double mmd_between(const Instance& inst, const Symbol& sym) {
  const Grid data = dual_grid(inst.grid);
  return mmd_density(inst.u.pdf(data), inst.v.pdf(data), sym).value;
}

// two-resolution growth heuristic for an unbounded C_F
inline bool cf_possibly_infinite(const SeparableSymbol& sym, const Grid& grid) {
  const SvdResult coarse = svd_of_separable(sym);
  if (coarse.numerical_rank() == 0) return false;
  const Grid fine = make_grid(grid.dim, grid.points_per_axis * 2, grid.half_width);
  SeparableSymbol refined = sym;
  refined.grid_x = fine;
  refined.grid_y = dual_grid(fine);
  for (auto& t : refined.terms) {
    if (std::holds_alternative<GridFunction>(t.f) ||
        std::holds_alternative<GridFunction>(t.g))
      return false;  // grid-backed factors cannot be resampled here
  }
  const SvdResult finer = svd_of_separable(refined);
  const int r = std::min(coarse.numerical_rank(), finer.numerical_rank());
  if (r == 0) return false;
  const double c0 = c_f_constant(coarse, r).value;
  const double c1 = c_f_constant(finer, r).value;
  return c1 > 2.0 * c0;
}

inline TrialRecord run_trial(CheckId check, std::uint64_t trial_seed,
                             const InstanceSpec& spec) {
  TrialRecord rec;
  rec.seed = trial_seed;
  const Instance inst = generate_instance(trial_seed, spec);
  const Grid& grid = inst.grid;
  const double scale = symbol_hs_scale(inst.symbol);
  const double tol = 1e-9 * (1.0 + scale);
  Rng aux(mix_seed(trial_seed, 0x7e57));

  switch (check) {
    case CheckId::triangle: {
      const Instance other = generate_instance(mix_seed(trial_seed, 1), spec);
      rec.lhs = mmd_between(inst, add(inst.symbol, other.symbol));
      rec.rhs = mmd_between(inst, inst.symbol) + mmd_between(inst, other.symbol);
      break;
    }
    case CheckId::lipschitz: {
      const Instance other = generate_instance(mix_seed(trial_seed, 1), spec);
      Instance alt = inst;
      alt.symbol = other.symbol;
      rec.lhs = std::abs(mmd_between(inst, inst.symbol) -
                         mmd_between(alt, other.symbol));
      const Symbol diff = subtract(inst.symbol, other.symbol);
      rec.rhs = 2.0 * pdo_dx_two_inf(std::get<SeparableSymbol>(diff), grid);
      break;
    }
    case CheckId::trunc_2inf: {
      const auto& sep = std::get<SeparableSymbol>(inst.symbol);
      const SvdResult svd = svd_of_separable(sep);
      const int nr = svd.numerical_rank();
      if (nr == 0) {
        rec.note = "zero symbol";
        break;
      }
      const int r = aux.uniform_int(0, nr - 1);
      const double cf = c_f_constant(svd, nr).value;
      const SeparableSymbol fr = truncate(svd, r);
      const Symbol rem = subtract(inst.symbol, fr);
      rec.lhs = pdo_dx_two_inf(std::get<SeparableSymbol>(rem), grid);
      rec.rhs = cf * tail_sum(svd, r, 1);
      // secondary: the MMD chain through the Lipschitz bound
      const double lhs2 =
          std::abs(mmd_between(inst, inst.symbol) - mmd_between(inst, Symbol(fr)));
      const double rhs2 = 2.0 * rec.rhs;
      rec.pass = rec.lhs <= rec.rhs + tol && lhs2 <= rhs2 + tol;
      rec.margin = std::min(rec.rhs - rec.lhs, rhs2 - lhs2);
      if (cf_possibly_infinite(sep, grid)) rec.note = "C_F likely infinite";
      return rec;
    }
    case CheckId::trunc_hs: {
      const SvdResult svd = symbol_svd(inst.symbol);
      const int r = svd.count() == 0 ? 0 : aux.uniform_int(0, svd.numerical_rank());
      const SeparableSymbol fr = truncate(svd, r);
      const Symbol rem = subtract(inst.symbol, fr);
      rec.lhs = hs_norm(build_operator(rem, OperatorKind::integral_of, grid));
      rec.rhs = std::sqrt(tail_sum(svd, r, 2));
      const double err = std::abs(rec.lhs - rec.rhs);
      const double eq_tol = 1e-8 * (1.0 + scale);
      rec.pass = err <= eq_tol;
      rec.margin = eq_tol - err;
      return rec;
    }
    case CheckId::diag: {
      const auto& sep = std::get<SeparableSymbol>(inst.symbol);
      const Grid data = dual_grid(grid);
      const auto d_b = pdo_xd_row_norm_sq(sep, grid);
      std::vector<std::vector<cxd>> fv, gv;
      for (const auto& t : sep.terms) {
        fv.push_back(factor_values(t.f, grid));
        gv.push_back(factor_values(t.g, data));
      }
      const double w = data.cell_weight();
      double max_da = 0, max_err = 0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        double da = 0;
        for (std::size_t j = 0; j < data.size(); ++j) {
          cxd z{0, 0};
          for (std::size_t t = 0; t < fv.size(); ++t) z += fv[t][i] * gv[t][j];
          da += std::norm(z);
        }
        da *= w;
        max_da = std::max(max_da, da);
        max_err = std::max(max_err, std::abs(da - d_b[i]));
      }
      rec.lhs = max_err;
      rec.rhs = 1e-6 * max_da;
      break;
    }
    case CheckId::hs_eq: {
      const auto& sep = std::get<SeparableSymbol>(inst.symbol);
      const double hs_a =
          hs_norm(build_operator(inst.symbol, OperatorKind::integral_of, grid));
      const double hs_b = pdo_hs_norm(sep, grid);
      rec.lhs = std::abs(hs_a - hs_b);
      rec.rhs = 1e-6 * hs_a;
      break;
    }
    case CheckId::dual_norm_bound: {
      const auto& sep = std::get<SeparableSymbol>(inst.symbol);
      const CanonicalSymbol canon = canonicalize(sep);
      if (canon.zero) {
        rec.note = "zero symbol";
        break;
      }
      rec.lhs = pdo_dx_two_inf(canon.sym, grid);
      rec.rhs = 0;
      const Grid data = dual_grid(grid);
      for (const auto& t : canon.sym.terms)
        rec.rhs += factor_l2(t.f, grid) * factor_linf(t.g, data);
      break;
    }
    case CheckId::shifted: {
      InstanceSpec base = spec;
      base.rank_lo = 1;
      base.rank_hi = 2;
      const Instance fin = generate_instance(mix_seed(trial_seed, 2), base);
      const auto& f_fin = std::get<SeparableSymbol>(fin.symbol);
      const int d = f_fin.rank();
      const auto& delta = std::get<SeparableSymbol>(inst.symbol);
      const SvdResult svd = svd_of_separable(delta);
      const int n = d + aux.uniform_int(1, 3);
      const int keep = std::min(n - d, svd.count());
      const SeparableSymbol delta_r = truncate(svd, keep);
      const Symbol rem = subtract(inst.symbol, delta_r);
      rec.lhs = pdo_dx_two_inf(std::get<SeparableSymbol>(rem), grid);
      rec.rhs = std::sqrt(tail_sum(svd, keep, 2));
      rec.pass = true;  // informational: the paper's constant is unspecified
      rec.margin = rec.rhs - rec.lhs;
      return rec;
    }
  }
  rec.margin = rec.rhs - rec.lhs + tol;
  rec.pass = rec.margin >= 0;
  return rec;
}

}  // namespace detail

inline CheckReport run_check(CheckId check, int instances, std::uint64_t seed,
                             InstanceSpec spec = {}) {
  if (instances < 1) throw SpecError("need at least one trial");
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport rep;
  rep.check = to_string(check);
  rep.trials = instances;
  rep.informational = check == CheckId::shifted;
  rep.records.resize(instances);

  const int nt = std::min(max_threads(), instances);
  const int chunk = (instances + nt - 1) / nt;
  parallel_blocks(nt, [&](int b) {
    const int lo = b * chunk, hi = std::min(instances, lo + chunk);
    for (int t = lo; t < hi; ++t) {
      const std::uint64_t trial_seed = mix_seed(seed, static_cast<std::uint64_t>(t));
      try {
        rep.records[t] = detail::run_trial(check, trial_seed, spec);
      } catch (const Error& e) {
        rep.records[t].seed = trial_seed;
        rep.records[t].pass = false;
        rep.records[t].note = e.what();
      }
    }
  });

  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.records) {
    rep.seeds.push_back(r.seed);
    if (!r.pass && !rep.informational) ++rep.violations;
    rep.worst_margin = std::min(rep.worst_margin, r.margin);
    if (r.rhs > 1e-300)
      rep.empirical_constant = std::max(rep.empirical_constant, r.lhs / r.rhs);
  }
  rep.runtime_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return rep;
}

struct CheckSummary {
  std::string check;
  int trials = 0;
  int violations = 0;
  double pass_rate = 1.0;
  double worst_margin = 0;
  double empirical_constant = 0;
};

inline std::vector<CheckSummary> aggregate(const std::vector<CheckReport>& reports) {
  if (reports.empty()) throw SpecError("nothing to aggregate");
  std::map<std::string, CheckSummary> by_check;
  for (const auto& r : reports) {
    auto& s = by_check[r.check];
    if (s.trials == 0) {
      s.check = r.check;
      s.worst_margin = r.worst_margin;
      s.empirical_constant = r.empirical_constant;
    } else {
      s.worst_margin = std::min(s.worst_margin, r.worst_margin);
      s.empirical_constant = std::max(s.empirical_constant, r.empirical_constant);
    }
    s.trials += r.trials;
    s.violations += r.violations;
  }
  std::vector<CheckSummary> out;
  for (auto& [name, s] : by_check) {
    s.pass_rate = s.trials == 0
                      ? 1.0
                      : 1.0 - static_cast<double>(s.violations) / s.trials;
    out.push_back(s);
  }
  return out;
}

}  // namespace pdommd
