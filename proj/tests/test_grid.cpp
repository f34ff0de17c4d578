#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pdommd/fourier.hpp"
#include "pdommd/grid.hpp"
#include "pdommd/rng.hpp"

using namespace pdommd;

namespace {

GridFunction gaussian_fn(const Grid& g, double width = 1.0) {
  return sample(g, [&](const std::array<double, 2>& p) {
    double q = 0;
    for (int a = 0; a < g.dim; ++a) q += p[a] * p[a];
    return std::exp(-q / (2 * width * width));
  });
}

GridFunction random_fn(const Grid& g, Rng& rng) {
  GridFunction f(g);
  for (auto& v : f.values) v = cxd(rng.normal(), rng.normal());
  return f;
}

}  // namespace

TEST(Grid, MakeGridDerivesSpacing) {
  const Grid g = make_grid(1, 8, 4.0);
  EXPECT_EQ(g.spacing, 1.0);
  EXPECT_EQ(g.size(), 8u);
  EXPECT_EQ(g.coord(0), -4.0);
  EXPECT_EQ(g.coord(7), 3.0);

  const Grid g2 = make_grid(2, 16, 8.0);
  EXPECT_EQ(g2.spacing, 1.0);
  EXPECT_EQ(g2.size(), 256u);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(make_grid(1, 6, 4.0), InvalidGrid);
  EXPECT_THROW(make_grid(1, 4, 4.0), InvalidGrid);
  EXPECT_THROW(make_grid(3, 8, 4.0), InvalidGrid);
  EXPECT_THROW(make_grid(1, 8, -1.0), InvalidGrid);
}

TEST(Grid, DualGridArithmetic) {
  const Grid g = make_grid(1, 512, 16.0);
  const Grid d = dual_grid(g);
  EXPECT_NEAR(d.spacing, kPi / g.half_width, 1e-15);
  EXPECT_NEAR(d.half_width, kPi / g.spacing, 1e-12);
  // the dual of the dual is the original grid
  EXPECT_EQ(dual_grid(d), g);
}

TEST(Fourier, ZeroMapsToZero) {
  const Grid g = make_grid(1, 64, 8.0);
  const GridFunction z(g);
  const GridFunction fz = fourier(z, FourierDirection::forward);
  for (const auto& v : fz.values) EXPECT_EQ(v, cxd(0, 0));
}

TEST(Fourier, GaussianSelfDual) {
  const Grid g = make_grid(1, 512, 16.0);
  const GridFunction f = gaussian_fn(g);
  const GridFunction fh = fourier(f, FourierDirection::forward);
  double worst = 0;
  for (std::size_t k = 0; k < fh.values.size(); ++k) {
    const auto y = fh.grid.point(k);
    worst = std::max(worst, std::abs(fh.values[k] - std::exp(-y[0] * y[0] / 2)));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Fourier, MatchesQuadratureOracle) {
  const Grid g = make_grid(1, 128, 10.0);
  Rng rng(7);
  GridFunction f = gaussian_fn(g, 1.3);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    f.values[i] *= cxd(1.0 + 0.1 * rng.normal(), 0.1 * rng.normal());
  const GridFunction fh = fourier(f, FourierDirection::forward);
  for (std::size_t k = 0; k < fh.values.size(); k += 17) {
    const cxd want = oracle::fourier_quadrature(f, fh.grid.point(k));
    EXPECT_LT(std::abs(fh.values[k] - want), 1e-10);
  }
}

TEST(Fourier, RoundTripAndUnitarity) {
  for (const Grid& g : {make_grid(1, 512, 16.0), make_grid(2, 32, 6.0)}) {
    Rng rng(42);
    for (int rep = 0; rep < (g.dim == 1 ? 100 : 10); ++rep) {
      const GridFunction f = random_fn(g, rng);
      const GridFunction fh = fourier(f, FourierDirection::forward);
      const GridFunction back = fourier(fh, FourierDirection::inverse);
      double maxerr = 0, maxabs = 0;
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        maxerr = std::max(maxerr, std::abs(back.values[i] - f.values[i]));
        maxabs = std::max(maxabs, std::abs(f.values[i]));
      }
      EXPECT_LT(maxerr, 1e-12 * maxabs);
      const double n0 = norm(f, NormKind::l2);
      const double n1 = norm(fh, NormKind::l2);
      EXPECT_LT(std::abs(n0 - n1), 1e-12 * n0);
    }
  }
}

TEST(Fourier, Linearity) {
  const Grid g = make_grid(1, 128, 8.0);
  Rng rng(3);
  const GridFunction f = random_fn(g, rng);
  const GridFunction h = random_fn(g, rng);
  const cxd a{1.7, -0.3}, b{-0.4, 2.2};
  GridFunction combo(g);
  for (std::size_t i = 0; i < combo.values.size(); ++i)
    combo.values[i] = a * f.values[i] + b * h.values[i];
  const GridFunction lhs = fourier(combo, FourierDirection::forward);
  const GridFunction fa = fourier(f, FourierDirection::forward);
  const GridFunction fb = fourier(h, FourierDirection::forward);
  double worst = 0, scale = 0;
  for (std::size_t i = 0; i < lhs.values.size(); ++i) {
    worst = std::max(worst,
                     std::abs(lhs.values[i] - (a * fa.values[i] + b * fb.values[i])));
    scale = std::max(scale, std::abs(lhs.values[i]));
  }
  EXPECT_LT(worst, 1e-12 * scale);
}

TEST(Integrate, GaussianUnitMass) {
  const Grid g = make_grid(1, 512, 16.0);
  const GridFunction pdf = sample(g, [](const std::array<double, 2>& p) {
    return std::exp(-p[0] * p[0] / 2) / std::sqrt(kTwoPi);
  });
  EXPECT_NEAR(integrate(pdf).real(), 1.0, 1e-10);
  EXPECT_NEAR(integrate(GridFunction(g)).real(), 0.0, 0.0);
}

TEST(Integrate, IndicatorWithinOneSpacing) {
  const Grid g = make_grid(1, 512, 16.0);
  const GridFunction ind = sample(g, [](const std::array<double, 2>& p) {
    return (p[0] >= -1.0 && p[0] < 1.0) ? 1.0 : 0.0;
  });
  EXPECT_NEAR(integrate(ind).real(), 2.0, g.spacing);
}

TEST(Integrate, RefinementStability) {
  double prev = 0;
  for (int n : {512, 1024}) {
    const Grid g = make_grid(1, n, 16.0);
    const GridFunction pdf = sample(g, [](const std::array<double, 2>& p) {
      return std::exp(-p[0] * p[0] / 2) / std::sqrt(kTwoPi);
    });
    const double mass = integrate(pdf).real();
    if (prev != 0) EXPECT_LT(std::abs(mass - prev), 1e-10);
    prev = mass;
  }
}

TEST(InnerProduct, BasicIdentities) {
  const Grid g = make_grid(1, 512, 16.0);
  const GridFunction f = gaussian_fn(g);
  const cxd self = inner_product(f, f);
  EXPECT_NEAR(self.imag(), 0.0, 1e-14);
  EXPECT_GT(self.real(), 0.0);
  EXPECT_NEAR(self.real(), norm(f, NormKind::l2) * norm(f, NormKind::l2), 1e-12);

  const GridFunction odd = sample(g, [](const std::array<double, 2>& p) {
    return p[0] * std::exp(-p[0] * p[0] / 2);
  });
  EXPECT_LT(std::abs(inner_product(f, odd)), 1e-12);

  const Grid other = make_grid(1, 256, 16.0);
  EXPECT_THROW(inner_product(f, GridFunction(other)), GridMismatch);
}

TEST(InnerProduct, DisjointIndicatorsOrthogonal) {
  const Grid g = make_grid(1, 64, 8.0);
  const GridFunction a = sample(g, [](const std::array<double, 2>& p) {
    return (p[0] >= -2.0 && p[0] < -1.0) ? 1.0 : 0.0;
  });
  const GridFunction b = sample(g, [](const std::array<double, 2>& p) {
    return (p[0] >= 1.0 && p[0] < 2.0) ? 1.0 : 0.0;
  });
  EXPECT_EQ(inner_product(a, b), cxd(0, 0));
}

TEST(Norm, GaussianPdfValues) {
  const Grid g = make_grid(1, 512, 16.0);
  const GridFunction pdf = sample(g, [](const std::array<double, 2>& p) {
    return std::exp(-p[0] * p[0] / 2) / std::sqrt(kTwoPi);
  });
  EXPECT_NEAR(norm(pdf, NormKind::l1), 1.0, 1e-10);
  EXPECT_NEAR(norm(pdf, NormKind::linf), 1.0 / std::sqrt(kTwoPi), 1e-12);
  EXPECT_EQ(norm(GridFunction(g), NormKind::l2), 0.0);
  EXPECT_EQ(norm(GridFunction(g), NormKind::l1), 0.0);
  EXPECT_EQ(norm(GridFunction(g), NormKind::linf), 0.0);
}

TEST(GridFunction, NonFiniteValuesRejected) {
  const Grid g = make_grid(1, 8, 4.0);
  GridFunction f(g);
  f.values[3] = cxd(std::numeric_limits<double>::quiet_NaN(), 0);
  EXPECT_THROW(check_finite(f, "test"), NumericalError);
}
