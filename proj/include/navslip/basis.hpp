#pragma once

#include "navslip/domain.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace navslip {

/// Pointwise velocity samples, one row per grid node.
using VelocityField = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Shape of a mode.
///  - TorusWave: u = a * c(k.x) with a orthogonal to k.
///  - Toroidal:  u = (-k2, k1, 0)/|k| * phi(z) * c(k.x)  (no vertical velocity)
///  - Poloidal:  u_h = k/|k|^2 * psi'(z) * c'(k.x), u_z = psi(z) * c(k.x)
///  - Mean:      u = e * phi(z), horizontally uniform, e = e_x or e_y
/// where c is cos or sin of the horizontal phase.
enum class ModeKind { TorusWave, Toroidal, Poloidal, Mean };
enum class Trig { Cos, Sin };

std::string to_string(ModeKind k);

struct BasisMode {
  int index = 0;
  ModeKind kind = ModeKind::TorusWave;
  Trig trig = Trig::Cos;
  std::array<int, 3> wavevector{0, 0, 0};  // integer wavenumbers, scaled by 2 pi / L_i
  int vertical_index = 0;
  int polarization = 0;
  std::array<double, 3> amplitude{0.0, 0.0, 0.0};  // TorusWave vector, Mean direction
  std::vector<double> profile;                     // Legendre coefficients in z/h (Slab)
  double h1_energy = 0.0;                          // ((w, w))
  double boundary_energy = 0.0;                    // int alpha (w.tau)^2 dS
  double vertical_eigenvalue = 0.0;
};

/// Largest wavenumber per axis and vertical polynomial degree of a basis.
struct Resolution {
  std::array<int, 3> max_wavenumber{0, 0, 0};
  int profile_degree = 0;
};

/// Finite divergence-free basis, orthonormal in L2, satisfying the
/// impermeability and slip conditions on Slab walls. Immutable once built.
struct BasisSet {
  DomainSpec domain;
  QuadratureGrid grid;
  Resolution resolution;
  std::vector<BasisMode> modes;
  Eigen::MatrixXd h1_gram;        // ((w_i, w_j))
  Eigen::MatrixXd boundary_gram;  // int alpha (w_i.tau)(w_j.tau) dS, zero on a Torus

  int size() const { return static_cast<int>(modes.size()); }
};

struct GridRequest {
  double oversampling = 2.0;
  std::array<int, 3> nodes{0, 0, 0};  // 0 selects the count implied by oversampling
};

/// Builds the m lowest modes ordered by nondecreasing h1 energy.
/// Throws std::invalid_argument when m < 1 or an explicit grid is too coarse,
/// std::runtime_error when a vertical eigenproblem fails.
BasisSet build_basis(const DomainSpec& domain, int m, const GridRequest& grid = {});

/// Grid resolving a basis with a given oversampling factor (counts per axis as
/// build_basis would choose them).
QuadratureGrid resolved_grid(const BasisSet& basis, double oversampling);

/// Mode values and gradients at quadrature nodes.
class FieldSampler {
 public:
  FieldSampler(const BasisSet& basis, const QuadratureGrid& grid);
  explicit FieldSampler(const BasisSet& basis) : FieldSampler(basis, basis.grid) {}

  int modes() const { return modes_; }
  std::size_t nodes() const { return static_cast<std::size_t>(weights_.size()); }
  const QuadratureGrid& grid() const { return grid_; }
  const DomainSpec& domain() const { return domain_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// value(c)(q, j) = c-th component of mode j at node q.
  const Eigen::MatrixXd& value(int c) const { return value_[c]; }
  /// gradient(c, d)(q, j) = d/dx_d of component c of mode j at node q.
  const Eigen::MatrixXd& gradient(int c, int d) const { return gradient_[3 * c + d]; }

  /// Wall nodes, side 0 at z = -h and side 1 at z = +h; empty on a Torus.
  const std::vector<std::size_t>& wall_nodes(int side) const { return walls_[side]; }
  /// Horizontal area weight of a wall node.
  double wall_weight(std::size_t q) const;

  VelocityField evaluate(const Eigen::VectorXd& coeffs) const;
  /// Gradient of the reconstructed field, entry 3*c+d holds du_c/dx_d.
  std::array<Eigen::VectorXd, 9> evaluate_gradient(const Eigen::VectorXd& coeffs) const;
  /// L2 inner products (field, w_j) by quadrature.
  Eigen::VectorXd project(const VelocityField& field) const;

 private:
  DomainSpec domain_;
  QuadratureGrid grid_;
  int modes_ = 0;
  Eigen::VectorXd weights_;
  std::array<Eigen::MatrixXd, 3> value_;
  std::array<Eigen::MatrixXd, 9> gradient_;
  std::array<std::vector<std::size_t>, 2> walls_;
};

/// Value and gradient of a single mode at a point.
struct ModeSample {
  std::array<double, 3> value{};
  std::array<std::array<double, 3>, 3> gradient{};  // gradient[c][d] = du_c/dx_d
};
ModeSample sample_mode(const BasisMode& mode, const DomainSpec& domain,
                       const std::array<double, 3>& x);

struct CertificationReport {
  double tolerance = 0.0;
  double max_divergence = 0.0;
  double max_normal_trace = 0.0;
  double max_slip = 0.0;
  double max_gram_deviation = 0.0;
  int worst_divergence_mode = -1;
  int worst_normal_trace_mode = -1;
  int worst_slip_mode = -1;
  int worst_gram_mode = -1;
  std::vector<int> failing_modes;
  bool pass = false;
};

/// Evaluates residuals of every mode on the basis grid, or on `grid` when
/// given. Never throws on a bad basis; the report carries the verdict.
CertificationReport verify_basis(const BasisSet& basis, double tol);
CertificationReport verify_basis(const BasisSet& basis, double tol, const QuadratureGrid& grid);

VelocityField evaluate_field(const BasisSet& basis, const Eigen::VectorXd& coeffs,
                             const QuadratureGrid& grid);
Eigen::VectorXd project_field(const BasisSet& basis, const VelocityField& field);
Eigen::VectorXd project_field(const BasisSet& basis, const VelocityField& field,
                              const QuadratureGrid& grid);

double inner_l2(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double inner_h1(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double inner_boundary(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Hex digest of the mode tables and grid, used to tie artifacts to a basis.
std::string basis_hash(const BasisSet& basis);

/// Basis files are JSON documents with a format_version field. Mode tables
/// round-trip bit-exactly.
inline constexpr int kBasisFormatVersion = 1;
void save_basis(const BasisSet& basis, const std::filesystem::path& path);
BasisSet load_basis(const std::filesystem::path& path);

/// Recomputes the stored Gram matrices from the mode tables.
void refresh_grams(BasisSet& basis);

}  // namespace navslip
