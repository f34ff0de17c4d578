#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pdommd/mmd.hpp"
#include "pdommd/rng.hpp"

namespace pdommd {

enum class ModelFamily { gaussian, mixture2 };
enum class FitOptimizer { nelder_mead, fd_gradient };

/**
 * Reparameterized sampler: a fixed pool of standard-normal (and uniform, for
 * the mixture) draws is frozen at construction, so sample_model is a smooth
 * deterministic function of the parameters.
 *   gaussian  params = (mu_1..mu_d, log sigma_1..log sigma_d)
 *   mixture2  params = (mu_a, log sigma_a, mu_b, log sigma_b, weight logit), 1D
 */
struct ParametricModel {
  ModelFamily family = ModelFamily::gaussian;
  int dim = 1;
  std::vector<double> params;
  std::uint64_t seed = 0;
  std::vector<double> base_noise;    // capacity * dim standard normals
  std::vector<double> base_uniform;  // capacity uniforms (mixture assignment)
  std::size_t capacity = 0;

  std::size_t param_count() const {
    return family == ModelFamily::gaussian ? 2 * static_cast<std::size_t>(dim) : 5;
  }
};

inline ParametricModel make_model(ModelFamily family, int dim,
                                  std::vector<double> init_params,
                                  std::size_t capacity, std::uint64_t seed) {
  if (family == ModelFamily::mixture2 && dim != 1)
    throw SpecError("mixture2 family is one-dimensional");
  ParametricModel m;
  m.family = family;
  m.dim = dim;
  m.params = std::move(init_params);
  m.seed = seed;
  m.capacity = capacity;
  if (m.params.size() != m.param_count())
    throw SpecError("parameter vector has the wrong length");
  Rng rng(seed);
  m.base_noise.resize(capacity * static_cast<std::size_t>(dim));
  for (auto& z : m.base_noise) z = rng.normal();
  m.base_uniform.resize(capacity);
  for (auto& u : m.base_uniform) u = rng.uniform();
  return m;
}

inline SampleSet sample_model(const ParametricModel& m,
                              const std::vector<double>& params, std::size_t n) {
  if (n > m.capacity)
    throw NoiseExhausted("requested " + std::to_string(n) + " samples, pool has " +
                         std::to_string(m.capacity));
  SampleSet out;
  out.dim = m.dim;
  out.seed = m.seed;
  out.points.resize(n);
  if (m.family == ModelFamily::gaussian) {
    for (std::size_t k = 0; k < n; ++k) {
      std::array<double, 2> p{0, 0};
      for (int a = 0; a < m.dim; ++a)
        p[a] = params[a] +
               std::exp(params[static_cast<std::size_t>(m.dim) + a]) *
                   m.base_noise[k * m.dim + a];
      out.points[k] = p;
    }
  } else {
    const double w = 1.0 / (1.0 + std::exp(-params[4]));
    for (std::size_t k = 0; k < n; ++k) {
      const bool first = m.base_uniform[k] < w;
      const double mu = first ? params[0] : params[2];
      const double ls = first ? params[1] : params[3];
      out.points[k] = {mu + std::exp(ls) * m.base_noise[k], 0.0};
    }
  }
  return out;
}

inline SampleSet sample_model(const ParametricModel& m, std::size_t n) {
  return sample_model(m, m.params, n);
}

struct FitResult {
  std::vector<double> params;
  std::vector<double> trajectory;  // best objective after each accepted step
  int evaluations = 0;
  bool converged = false;
  bool degenerate_kernel = false;
};

namespace detail {

// spectral objective with the data-side characteristic functions hoisted out
class SpectralObjective {
 public:
  SpectralObjective(const SampleSet& data, const ParametricModel& model,
                    const SeparableSymbol& sym, const Grid& grid)
      : model_(model), sym_(sym), grid_(grid), n_(model.capacity) {
    for (const auto& term : sym.terms) {
      data_phi_.push_back(weighted_char_fn(data, term.g, grid));
      fvals_.push_back(factor_values(term.f, grid));
    }
  }

  double operator()(const std::vector<double>& params) const {
    const SampleSet s = sample_model(model_, params, n_);
    GridFunction w(grid_);
    for (std::size_t t = 0; t < sym_.terms.size(); ++t) {
      const GridFunction pm = weighted_char_fn(s, sym_.terms[t].g, grid_);
      for (std::size_t i = 0; i < w.values.size(); ++i)
        w.values[i] += fvals_[t][i] * (data_phi_[t].values[i] - pm.values[i]);
    }
    double sq = 0;
    for (const cxd& v : w.values) sq += std::norm(v);
    return std::sqrt(std::max(sq * grid_.cell_weight(), 0.0));
  }

  double symbol_scale() const {
    double s = 0;
    for (const auto& fv : fvals_)
      for (const cxd& v : fv) s = std::max(s, std::abs(v));
    return s;
  }

 private:
  const ParametricModel& model_;
  const SeparableSymbol& sym_;
  Grid grid_;
  std::size_t n_;
  std::vector<GridFunction> data_phi_;
  std::vector<std::vector<cxd>> fvals_;
};

inline double simplex_diameter(const std::vector<std::vector<double>>& pts) {
  double d = 0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      double q = 0;
      for (std::size_t i = 0; i < pts[a].size(); ++i) {
        const double dd = pts[a][i] - pts[b][i];
        q += dd * dd;
      }
      d = std::max(d, std::sqrt(q));
    }
  return d;
}

}  // namespace detail

/**
 * Minimizes MMD(data, sampler(theta)) over the model parameters with a
 * derivative-free Nelder-Mead search or central-difference gradient descent.
 * The frozen noise pool makes the objective deterministic, so the trajectory
 * of accepted best values is nonincreasing by construction.
 */
inline FitResult fit_mmd(const SampleSet& data, const ParametricModel& model,
                         const SeparableSymbol& sym, FitOptimizer optimizer,
                         int budget, const Grid& grid) {
  if (budget < 50) throw SpecError("evaluation budget must be at least 50");
  if (data.size() == 0) throw SpecError("data sample set is empty");

  detail::SpectralObjective objective(data, model, sym, grid);
  FitResult out;
  out.params = model.params;

  if (objective.symbol_scale() < 1e-300) {
    out.degenerate_kernel = true;
    out.converged = true;
    out.trajectory.push_back(0.0);
    return out;
  }

  int evals = 0;
  auto eval = [&](const std::vector<double>& p) {
    ++evals;
    return objective(p);
  };
  const double conv_tol = 1e-4;
  const std::size_t np = model.params.size();

  if (optimizer == FitOptimizer::nelder_mead) {
    std::vector<std::vector<double>> pts(np + 1, model.params);
    for (std::size_t i = 0; i < np; ++i)
      pts[i + 1][i] += 0.25 * (1.0 + std::abs(model.params[i]));
    std::vector<double> fv(np + 1);
    for (std::size_t i = 0; i <= np; ++i) fv[i] = eval(pts[i]);

    auto order = [&] {
      std::vector<std::size_t> idx(np + 1);
      for (std::size_t i = 0; i <= np; ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(),
                [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
      std::vector<std::vector<double>> np_pts;
      std::vector<double> np_fv;
      for (std::size_t i : idx) {
        np_pts.push_back(pts[i]);
        np_fv.push_back(fv[i]);
      }
      pts = std::move(np_pts);
      fv = std::move(np_fv);
    };
    order();
    out.trajectory.push_back(fv[0]);

    while (evals < budget) {
      if (detail::simplex_diameter(pts) < conv_tol) {
        out.converged = true;
        break;
      }
      std::vector<double> centroid(np, 0.0);
      for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t a = 0; a < np; ++a) centroid[a] += pts[i][a];
      }
      for (auto& c : centroid) c /= static_cast<double>(np);
      auto blend = [&](double coef) {
        std::vector<double> p(np);
        for (std::size_t a = 0; a < np; ++a)
          p[a] = centroid[a] + coef * (pts[np][a] - centroid[a]);
        return p;
      };
      const auto xr = blend(-1.0);
      const double fr = eval(xr);
      if (fr < fv[0]) {
        const auto xe = blend(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[np] = xe;
          fv[np] = fe;
        } else {
          pts[np] = xr;
          fv[np] = fr;
        }
      } else if (fr < fv[np - 1]) {
        pts[np] = xr;
        fv[np] = fr;
      } else {
        const auto xc = blend(fr < fv[np] ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, fv[np])) {
          pts[np] = xc;
          fv[np] = fc;
        } else {
          for (std::size_t i = 1; i <= np && evals < budget; ++i) {
            for (std::size_t a = 0; a < np; ++a)
              pts[i][a] = pts[0][a] + 0.5 * (pts[i][a] - pts[0][a]);
            fv[i] = eval(pts[i]);
          }
        }
      }
      order();
      if (fv[0] < out.trajectory.back()) out.trajectory.push_back(fv[0]);
    }
    out.params = pts[0];
  } else {
    std::vector<double> theta = model.params;
    double best = eval(theta);
    out.trajectory.push_back(best);
    double step = 0.5;
    while (evals + 2 * static_cast<int>(np) + 1 <= budget) {
      std::vector<double> grad(np);
      double gnorm = 0;
      for (std::size_t i = 0; i < np; ++i) {
        const double h = 1e-4 * (1.0 + std::abs(theta[i]));
        auto tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        grad[i] = (eval(tp) - eval(tm)) / (2 * h);
        gnorm += grad[i] * grad[i];
      }
      gnorm = std::sqrt(gnorm);
      if (gnorm < conv_tol) {
        out.converged = true;
        break;
      }
      bool accepted = false;
      while (evals < budget) {
        std::vector<double> cand(np);
        for (std::size_t i = 0; i < np; ++i)
          cand[i] = theta[i] - step * grad[i] / gnorm;
        const double fc = eval(cand);
        if (fc < best) {
          theta = cand;
          best = fc;
          out.trajectory.push_back(best);
          step *= 1.5;
          accepted = true;
          break;
        }
        step *= 0.5;
        if (step < 1e-10) break;
      }
      if (!accepted && step < 1e-10) {
        out.converged = true;
        break;
      }
    }
    out.params = theta;
  }

  out.evaluations = evals;
  return out;
}

inline FitResult fit_mmd(const SampleSet& data, const ParametricModel& model,
                         const SeparableSymbol& sym, FitOptimizer optimizer,
                         int budget) {
  return fit_mmd(data, model, sym, optimizer, budget, sym.grid_x);
}

}  // namespace pdommd
