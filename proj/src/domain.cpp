#include "navslip/domain.hpp"

#include "navslip/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace navslip {

std::string to_string(Geometry g) {
  return g == Geometry::Torus ? "torus" : "slab";
}

DomainSpec DomainSpec::torus(double l1, double l2, double l3) {
  DomainSpec d;
  d.geometry = Geometry::Torus;
  d.lengths = {l1, l2, l3};
  d.validate();
  return d;
}

DomainSpec DomainSpec::slab(double l1, double l2, double half_height, double alpha) {
  DomainSpec d;
  d.geometry = Geometry::Slab;
  d.lengths = {l1, l2, 2.0 * half_height};
  d.friction = alpha;
  d.validate();
  return d;
}

void DomainSpec::validate() const {
  for (double l : lengths) {
    if (!(l > 0.0) || !std::isfinite(l))
      throw std::invalid_argument("domain lengths must be strictly positive");
  }
  if (!(friction >= 0.0) || !std::isfinite(friction))
    throw std::invalid_argument("friction coefficient alpha must be >= 0");
  if (geometry == Geometry::Torus && friction != 0.0)
    throw std::invalid_argument("a torus has no boundary; friction must be 0");
}

double QuadratureGrid::weight(std::size_t q) const {
  const std::size_t i1 = q % n[0];
  const std::size_t i2 = (q / n[0]) % n[1];
  const std::size_t i3 = q / (static_cast<std::size_t>(n[0]) * n[1]);
  return axis_weights[0][i1] * axis_weights[1][i2] * axis_weights[2][i3];
}

std::array<double, 3> QuadratureGrid::point(std::size_t q) const {
  const std::size_t i1 = q % n[0];
  const std::size_t i2 = (q / n[0]) % n[1];
  const std::size_t i3 = q / (static_cast<std::size_t>(n[0]) * n[1]);
  return {coords[0][i1], coords[1][i2], coords[2][i3]};
}

std::vector<double> QuadratureGrid::weights() const {
  std::vector<double> w(size());
  for (std::size_t q = 0; q < w.size(); ++q) w[q] = weight(q);
  return w;
}

QuadratureGrid make_grid(const DomainSpec& domain, std::array<int, 3> n, double oversampling) {
  domain.validate();
  QuadratureGrid g;
  g.n = n;
  g.oversampling = oversampling;
  const bool slab = domain.geometry == Geometry::Slab;
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 1) throw std::invalid_argument("grid node counts must be positive");
    if (a == 2 && slab) {
      if (n[a] < 2) throw std::invalid_argument("slab vertical rule needs >= 2 nodes");
      const Rule1D r = gauss_lobatto(n[a]);
      const double h = domain.half_height();
      g.coords[a].resize(n[a]);
      g.axis_weights[a].resize(n[a]);
      for (int i = 0; i < n[a]; ++i) {
        g.coords[a][i] = h * r.nodes[i];
        g.axis_weights[a][i] = h * r.weights[i];
      }
    } else {
      const double L = domain.lengths[a];
      g.coords[a].resize(n[a]);
      g.axis_weights[a].assign(n[a], L / n[a]);
      for (int i = 0; i < n[a]; ++i) g.coords[a][i] = L * i / n[a];
    }
  }
  return g;
}

}  // namespace navslip
