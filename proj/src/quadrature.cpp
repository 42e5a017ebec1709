#include "navslip/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace navslip {

LegendreTable legendre_table(int degree, double xi) {
  LegendreTable t;
  t.p.assign(degree + 1, 0.0);
  t.dp.assign(degree + 1, 0.0);
  t.d2p.assign(degree + 1, 0.0);
  t.p[0] = 1.0;
  if (degree == 0) return t;
  t.p[1] = xi;
  t.dp[1] = 1.0;
  for (int n = 1; n < degree; ++n) {
    t.p[n + 1] = ((2.0 * n + 1.0) * xi * t.p[n] - n * t.p[n - 1]) / (n + 1.0);
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n, differentiated once more for P''.
    t.dp[n + 1] = t.dp[n - 1] + (2.0 * n + 1.0) * t.p[n];
    t.d2p[n + 1] = t.d2p[n - 1] + (2.0 * n + 1.0) * t.dp[n];
  }
  return t;
}

Rule1D gauss_lobatto(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto: need at least 2 points");
  const int N = n - 1;  // interior nodes are the roots of P'_N
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-Gauss-Lobatto initial guess, ascending order
    double x = -std::cos(std::numbers::pi * i / N);
    if (i > 0 && i < N) {
      for (int it = 0; it < 100; ++it) {
        // Newton on (1 - x^2) P'_N(x) using the Legendre ODE:
        // d/dx[(1-x^2) P'_N] = -N(N+1) P_N
        const LegendreTable t = legendre_table(N, x);
        const double f = (1.0 - x * x) * t.dp[N];
        const double df = -N * (N + 1.0) * t.p[N];
        const double dx = f / df;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
    }
    r.nodes[i] = x;
  }
  // symmetrize to remove roundoff asymmetry
  for (int i = 0; i < n / 2; ++i) {
    const double a = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    r.nodes[i] = -a;
    r.nodes[n - 1 - i] = a;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pn = legendre_table(N, r.nodes[i]).p[N];
    r.weights[i] = 2.0 / (N * (N + 1.0) * pn * pn);
  }
  return r;
}

}  // namespace navslip
