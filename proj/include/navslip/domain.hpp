#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace navslip {

enum class Geometry { Torus, Slab };

std::string to_string(Geometry g);

/// Computational domain. A Torus is triply periodic with periods
/// (L1, L2, L3). A Slab is periodic in x and y with periods (L1, L2) and is
/// bounded by flat walls at z = -h and z = +h carrying the Navier slip
/// condition with constant friction alpha on both walls.
struct DomainSpec {
  Geometry geometry = Geometry::Torus;
  std::array<double, 3> lengths{0.0, 0.0, 0.0};  // Slab: lengths[2] = 2h
  double friction = 0.0;                         // alpha, Slab only

  static DomainSpec torus(double l1, double l2, double l3);
  static DomainSpec slab(double l1, double l2, double half_height, double alpha);

  double half_height() const { return 0.5 * lengths[2]; }
  double volume() const { return lengths[0] * lengths[1] * lengths[2]; }
  bool has_boundary() const { return geometry == Geometry::Slab; }

  /// Throws std::invalid_argument on nonpositive lengths or negative alpha.
  void validate() const;

  bool operator==(const DomainSpec&) const = default;
};

/// Tensor-product quadrature grid. Horizontal directions (and z on the Torus)
/// use the uniform periodic trapezoid rule; the Slab vertical direction uses a
/// Gauss-Lobatto-Legendre rule, so the wall planes z = +-h are grid planes.
///
/// Node q has indices (i1, i2, i3) with q = i1 + n1 * (i2 + n2 * i3).
struct QuadratureGrid {
  std::array<int, 3> n{0, 0, 0};
  double oversampling = 1.0;
  std::array<std::vector<double>, 3> coords;
  std::array<std::vector<double>, 3> axis_weights;

  std::size_t size() const {
    return static_cast<std::size_t>(n[0]) * n[1] * n[2];
  }
  std::size_t index(int i1, int i2, int i3) const {
    return static_cast<std::size_t>(i1) + n[0] * (static_cast<std::size_t>(i2) + n[1] * i3);
  }
  double weight(std::size_t q) const;
  std::array<double, 3> point(std::size_t q) const;

  /// Full weight vector, length size().
  std::vector<double> weights() const;

  bool operator==(const QuadratureGrid& o) const {
    return n == o.n && oversampling == o.oversampling;
  }
};

/// Builds the grid for a domain with the given per-axis node counts.
/// For a Slab, n[2] is the number of Gauss-Lobatto-Legendre points.
QuadratureGrid make_grid(const DomainSpec& domain, std::array<int, 3> n, double oversampling);

}  // namespace navslip
