#pragma once

#include <vector>

namespace navslip {

/// Nodes and weights of a one-dimensional rule on [-1, 1].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Lobatto-Legendre rule with n >= 2 points. Endpoints are included,
/// weights are positive and the rule is exact for polynomials of degree 2n-3.
Rule1D gauss_lobatto(int n);

/// Values of the Legendre polynomials P_0..P_degree and their first and
/// second derivatives at a single point xi in [-1, 1].
struct LegendreTable {
  std::vector<double> p;
  std::vector<double> dp;
  std::vector<double> d2p;
};

LegendreTable legendre_table(int degree, double xi);

}  // namespace navslip
