#include "navslip/domain.hpp"
#include "navslip/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace navslip;

TEST(GaussLobatto, IntegratesPolynomialsUpToDegree2nMinus3) {
  for (int n : {2, 3, 5, 9, 20, 41}) {
    const Rule1D r = gauss_lobatto(n);
    EXPECT_DOUBLE_EQ(r.nodes.front(), -1.0);
    EXPECT_DOUBLE_EQ(r.nodes.back(), 1.0);
    for (int p = 0; p <= 2 * n - 3; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      const double exact = (p % 2 == 1) ? 0.0 : 2.0 / (p + 1);
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " p=" << p;
    }
    for (double w : r.weights) EXPECT_GT(w, 0.0);
  }
}

TEST(GaussLobatto, RejectsSinglePoint) { EXPECT_THROW(gauss_lobatto(1), std::invalid_argument); }

TEST(Legendre, DerivativesMatchFiniteDifferences) {
  const double x = 0.3, eps = 1e-5;
  const auto t = legendre_table(12, x);
  const auto tp = legendre_table(12, x + eps);
  const auto tm = legendre_table(12, x - eps);
  for (int n = 0; n <= 12; ++n) {
    EXPECT_NEAR(t.dp[n], (tp.p[n] - tm.p[n]) / (2 * eps), 1e-6);
    EXPECT_NEAR(t.d2p[n], (tp.dp[n] - tm.dp[n]) / (2 * eps), 1e-5);
  }
}

TEST(QuadratureGrid, WeightsSumToVolume) {
  const auto torus = DomainSpec::torus(2 * std::numbers::pi, 3.0, 1.5);
  const auto slab = DomainSpec::slab(2 * std::numbers::pi, 4.0, 0.7, 1.0);
  for (const auto& [d, n] : {std::pair{torus, std::array<int, 3>{6, 8, 10}},
                             std::pair{slab, std::array<int, 3>{6, 4, 17}}}) {
    const QuadratureGrid g = make_grid(d, n, 2.0);
    double s = 0.0;
    for (double w : g.weights()) s += w;
    EXPECT_NEAR(s / d.volume(), 1.0, 1e-12);
  }
}

TEST(QuadratureGrid, SlabVerticalRuleIsClusteredWithWallPlanes) {
  const auto slab = DomainSpec::slab(1.0, 1.0, 2.0, 0.0);
  const QuadratureGrid g = make_grid(slab, {2, 2, 16}, 1.0);
  EXPECT_DOUBLE_EQ(g.coords[2].front(), -2.0);
  EXPECT_DOUBLE_EQ(g.coords[2].back(), 2.0);
  const double near_wall = g.coords[2][1] - g.coords[2][0];
  const double center = g.coords[2][8] - g.coords[2][7];
  EXPECT_LT(near_wall, 0.5 * center);
}

TEST(DomainSpec, RejectsInvalidParameters) {
  EXPECT_THROW(DomainSpec::slab(1.0, 1.0, 1.0, -0.1), std::invalid_argument);
  EXPECT_THROW(DomainSpec::torus(1.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(DomainSpec::slab(1.0, 1.0, -1.0, 0.0), std::invalid_argument);
}
