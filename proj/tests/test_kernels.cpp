#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pdommd/harness.hpp"
#include "pdommd/kernels.hpp"
#include "pdommd/rng.hpp"

using namespace pdommd;

namespace {

SeparableSymbol unit_gaussian_symbol(const Grid& g) {
  return make_separable(
      g, {{Factor(AnalyticTerm(GaussHermite{0, 1.0, {0, 0}, {1, 0}})),
           Factor(AnalyticTerm(ConstantTerm{{1, 0}}))}});
}

double gauss_kernel(double s, double t) {
  return std::sqrt(kPi) * std::exp(-(s - t) * (s - t) / 4);
}

}  // namespace

TEST(KernelClosed, UnitGaussianClosedForm) {
  const Grid g = make_grid(1, 512, 16.0);
  const KernelForm k = kernel_closed(unit_gaussian_symbol(g));
  EXPECT_NEAR(kernel_eval(k, {0, 0}, {0, 0}).real(), std::sqrt(kPi), 1e-12);
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const double s = rng.uniform(-5, 5), t = rng.uniform(-5, 5);
    const cxd got = kernel_eval(k, {s, 0}, {t, 0});
    EXPECT_LT(std::abs(got - cxd(gauss_kernel(s, t), 0)), 1e-6);
  }
  // quadrature oracle for the defining transform integral
  const GridFunction prod = sample(g, [](const std::array<double, 2>& p) {
    return std::exp(-p[0] * p[0]);
  });
  for (double u : {0.0, 0.7, -1.3, 2.9}) {
    const cxd want =
        std::sqrt(kTwoPi) * oracle::fourier_quadrature(prod, {-u, 0});
    EXPECT_LT(std::abs(kernel_eval(k, {0, 0}, {u, 0}) - want), 1e-9);
  }
}

TEST(KernelClosed, ZeroSymbolAndFeatureWeights) {
  const Grid g = make_grid(1, 256, 12.0);
  const KernelForm kz = kernel_closed(make_separable(g, {}));
  EXPECT_EQ(kernel_eval(kz, {0.4, 0}, {-2.0, 0}), cxd(0, 0));

  // g(y) = y gives the first-moment feature kernel s t K0(s,t)
  SeparableSymbol sym = make_separable(
      g, {{Factor(AnalyticTerm(GaussHermite{0, 1.0, {0, 0}, {1, 0}})),
           Factor(AnalyticTerm(Poly{{{{1, 0}, {1, 0}}}}))}});
  const KernelForm k = kernel_closed(sym);
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const double s = rng.uniform(-4, 4), t = rng.uniform(-4, 4);
    EXPECT_LT(std::abs(kernel_eval(k, {s, 0}, {t, 0}) -
                       cxd(s * t * gauss_kernel(s, t), 0)),
              1e-6);
  }
}

TEST(KernelClosed, GridBackedFactorsUseQuadrature) {
  // translation-invariant round trip: kernel of from_translation_invariant(k)
  // reproduces the profile within 1e-6 relative
  const Grid g = make_grid(1, 512, 16.0);
  const Grid data = dual_grid(g);
  const GridFunction prof = sample(data, [](const std::array<double, 2>& p) {
    return std::sqrt(kPi) * std::exp(-p[0] * p[0] / 4);
  });
  const SeparableSymbol sym = from_translation_invariant(prof);
  const KernelForm k = kernel_closed(sym);
  double worst = 0;
  for (double s : {-3.0, -1.0, 0.0, 0.4}) {
    for (double t : {-2.0, 0.0, 1.1, 3.3}) {
      const double want = gauss_kernel(s, t);
      worst = std::max(worst,
                       std::abs(kernel_eval(k, {s, 0}, {t, 0}) - cxd(want, 0)) /
                           want);
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(KernelGrid, MatchesClosedFormOnLattice) {
  const Grid g = make_grid(1, 256, 12.0);
  const Grid data = dual_grid(g);
  const SeparableSymbol sym = unit_gaussian_symbol(g);
  const KernelForm kg = kernel_grid(Symbol(sym), g);
  const auto& gm = std::get<GridMatrixKernel>(kg);
  // probe lattice pairs in the bulk
  const int c = static_cast<int>(data.size()) / 2;
  double worst = 0;
  for (int a = c - 40; a < c + 40; a += 7) {
    for (int b = a - 12; b <= a + 12; b += 3) {
      const double s = data.point(a)[0], t = data.point(b)[0];
      const cxd got = gm.entries(a, b);
      worst = std::max(worst, std::abs(got - cxd(gauss_kernel(s, t), 0)) /
                                  gauss_kernel(s, t));
    }
  }
  EXPECT_LT(worst, 1e-4);

  // zero symbol gives the zero matrix
  const KernelForm kz = kernel_grid(Symbol(make_separable(g, {})), g);
  EXPECT_NEAR(std::get<GridMatrixKernel>(kz).entries.norm(), 0.0, 1e-14);
}

TEST(KernelGrid, UniversalityGaussianEnvelope) {
  const Grid g = make_grid(1, 128, 12.0);
  const double eps = 0.7;
  const DenseSymbol s = universality_symbol(eps, {{{{0, 0}, {1, 0}}}}, g);
  const KernelForm kg = kernel_grid(Symbol(s), g);
  const auto& gm = std::get<GridMatrixKernel>(kg);
  const Grid data = dual_grid(g);
  const int c = static_cast<int>(data.size()) / 2;
  // reference kernel from the defining family, with the convention constant
  // 2 eps sqrt(pi) fixed by the operator normalization
  const double scale = 2 * eps * std::sqrt(kPi);
  double worst = 0;
  for (int a = c - 30; a < c + 30; a += 5) {
    for (int b = a - 10; b <= a + 10; b += 2) {
      const double u = data.point(a)[0] - data.point(b)[0];
      const double want = scale * std::exp(-eps * eps * u * u);
      worst = std::max(worst,
                       std::abs(gm.entries(a, b) - cxd(want, 0)) / want);
    }
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Gram, SmallFixtures) {
  const Grid g = make_grid(1, 256, 12.0);
  const KernelForm k = kernel_closed(unit_gaussian_symbol(g));

  const GramMatrix single = gram(k, {{0.7, 0}}, 1);
  EXPECT_EQ(single.entries.rows(), 1);
  EXPECT_NEAR(single.entries(0, 0).real(), std::sqrt(kPi), 1e-12);
  EXPECT_NEAR(single.entries(0, 0).imag(), 0.0, 1e-14);

  const GramMatrix dup = gram(k, {{0.5, 0}, {0.5, 0}, {1.5, 0}}, 1);
  for (int j = 0; j < 3; ++j)
    EXPECT_EQ(dup.entries(0, j), dup.entries(1, j));

  // equally spaced points give a Toeplitz Gram with entries sqrt(pi) e^{-d^2/4}
  const double d = 0.8;
  const GramMatrix toe = gram(k, {{0, 0}, {d, 0}, {2 * d, 0}}, 1);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      EXPECT_NEAR(toe.entries(a, b).real(), gauss_kernel(a * d, b * d), 1e-10);
}

TEST(PsdCheck, PassAndFailCases) {
  GramMatrix zero;
  zero.entries.setZero(4, 4);
  const PsdReport zr = psd_check(zero);
  EXPECT_TRUE(zr.pass);
  EXPECT_EQ(zr.min_eig, 0.0);

  const Grid g = make_grid(1, 256, 12.0);
  const KernelForm k = kernel_closed(unit_gaussian_symbol(g));
  Rng rng(31);
  std::vector<std::array<double, 2>> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({rng.uniform(-5, 5), 0});
  const PsdReport pr = psd_check(gram(k, pts, 1));
  EXPECT_TRUE(pr.pass);

  GramMatrix bad;
  bad.entries.setZero(3, 3);
  bad.entries(0, 0) = 1.0;
  bad.entries(1, 1) = -1.0;
  bad.entries(2, 2) = 2.0;
  EXPECT_FALSE(psd_check(bad).pass);
}

TEST(Kernels, ClosedAndGridAgreeOnRandomSymbols) {
  const Grid g = make_grid(1, 256, 12.0);
  const Grid data = dual_grid(g);
  for (int rep = 0; rep < 5; ++rep) {
    const Instance inst = generate_instance(
        mix_seed(2024, rep),
        InstanceSpec{1, 1, 2, 2, SymbolFamily::separable_gauss_hermite, g});
    const auto& sym = std::get<SeparableSymbol>(inst.symbol);
    const KernelForm kc = kernel_closed(sym);
    const KernelForm kg = kernel_grid(inst.symbol, g);
    const auto& gm = std::get<GridMatrixKernel>(kg);
    const int c = static_cast<int>(data.size()) / 2;
    double worst = 0, scale = 0;
    for (int a = c - 24; a < c + 24; a += 5) {
      for (int b = c - 24; b < c + 24; b += 5) {
        const cxd closed = kernel_eval(kc, data.point(a), data.point(b));
        worst = std::max(worst, std::abs(closed - gm.entries(a, b)));
        scale = std::max(scale, std::abs(closed));
      }
    }
    EXPECT_LT(worst, 1e-4 * std::max(scale, 1e-6));
  }
}

TEST(Kernels, HermitianAndPsdInvariants) {
  const Grid g = make_grid(1, 256, 12.0);
  Rng rng(47);
  for (int rep = 0; rep < 3; ++rep) {
    const Instance inst = generate_instance(
        mix_seed(5401, rep),
        InstanceSpec{1, 1, 3, 2, SymbolFamily::separable_gauss_hermite, g});
    const auto& sym = std::get<SeparableSymbol>(inst.symbol);
    const KernelForm k = kernel_closed(sym);
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({rng.uniform(-6, 6), 0});
    // Hermitian symmetry at probe pairs
    for (int i = 0; i < 20; ++i) {
      const auto s = pts[i], t = pts[i + 20];
      const cxd a = kernel_eval(k, s, t);
      const cxd b = kernel_eval(k, t, s);
      EXPECT_LT(std::abs(a - std::conj(b)), 1e-10 * std::max(1.0, std::abs(a)));
    }
    const PsdReport pr = psd_check(gram(k, pts, 1));
    EXPECT_TRUE(pr.pass) << "min " << pr.min_eig << " max " << pr.max_eig;
  }
}

TEST(Kernels, TruncationKernelConverges) {
  const Grid g = make_grid(1, 256, 12.0);
  const Instance inst = generate_instance(
      60601, InstanceSpec{1, 2, 3, 2, SymbolFamily::separable_gauss_hermite, g});
  const auto& sym = std::get<SeparableSymbol>(inst.symbol);
  const SvdResult svd = svd_of_separable(sym);
  const SeparableSymbol full = truncate(svd, svd.count());
  const KernelForm korig = kernel_closed(sym);
  const KernelForm kfull = kernel_closed(full);
  const Grid data = dual_grid(g);
  const int c = static_cast<int>(data.size()) / 2;
  double worst = 0, scale = 0;
  for (int a = c - 12; a <= c + 12; a += 3) {
    for (int b = c - 12; b <= c + 12; b += 3) {
      const cxd va = kernel_eval(korig, data.point(a), data.point(b));
      const cxd vb = kernel_eval(kfull, data.point(a), data.point(b));
      worst = std::max(worst, std::abs(va - vb));
      scale = std::max(scale, std::abs(va));
    }
  }
  EXPECT_LT(worst, 1e-6 * std::max(scale, 1e-9));
}

TEST(Kernels, TransformUnavailableForNondecayingProducts) {
  const Grid g = make_grid(1, 64, 8.0);
  SeparableSymbol bad = make_separable(
      g, {{Factor(AnalyticTerm(ConstantTerm{{1, 0}})),
           Factor(AnalyticTerm(ConstantTerm{{1, 0}}))}});
  EXPECT_THROW(kernel_closed(bad), TransformUnavailable);
}
