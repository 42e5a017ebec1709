#pragma once

#include "navslip/basis.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace navslip {

/// Physical parameters with density fixed to 1.
struct PhysicsParams {
  double viscosity = 1.0;  // mu > 0
  double damping = 0.0;    // theta >= 0
  double exponent = 1.0;   // beta >= 1

  void validate() const;
};

/// Right-hand side forcing expressed through its Galerkin coefficients
/// (f(t), w_j). `l2_norm_squared` returns ||f(t)||^2 over the whole domain,
/// which exceeds the coefficient norm when f has components outside the span.
struct Forcing {
  std::function<Eigen::VectorXd(double)> coefficients;
  std::function<double(double)> l2_norm_squared;
  bool identically_zero = false;

  static Forcing none(int m);
  static Forcing constant(Eigen::VectorXd coeffs);
  /// Samples f(t) on the sampler's grid and projects it.
  static Forcing from_field(std::shared_ptr<const FieldSampler> sampler,
                            std::function<VelocityField(double)> field);
};

enum class ConvectionPath { Transform, Tensor };

/// Galerkin operators on a fixed basis. Immutable after construction except
/// for the dense convection tensor, which is assembled once on first use.
class OperatorSet {
 public:
  explicit OperatorSet(const BasisSet& basis);

  int size() const { return basis_->size(); }
  const BasisSet& basis() const { return *basis_; }
  const FieldSampler& sampler() const { return *sampler_; }
  std::shared_ptr<const FieldSampler> shared_sampler() const { return sampler_; }

  /// A_ij = 2 ((w_i, w_j)) + int alpha (w_i.tau)(w_j.tau) dS
  const Eigen::MatrixXd& stiffness() const { return stiffness_; }

  /// True when the grid integrates the cubic convection integrand exactly.
  bool dealiased() const { return dealiased_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// j-th entry b(u, u, w_j).
  Eigen::VectorXd convection(const Eigen::VectorXd& g,
                             ConvectionPath path = ConvectionPath::Transform) const;
  /// j-th entry theta * int |u|^(beta-1) u . w_j.
  Eigen::VectorXd damping(const Eigen::VectorXd& g, const PhysicsParams& params) const;
  /// b(a, b, c) by quadrature on the basis grid.
  double trilinear(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) const;
  /// int |u|^p dx by quadrature on the basis grid.
  double lp_norm_pow(const Eigen::VectorXd& g, double p) const;

  /// Dense tensor T[i](l, j) = b(w_i, w_l, w_j), assembled on a grid with
  /// oversampling >= 2 so it is exact regardless of the run grid.
  const std::vector<Eigen::MatrixXd>& convection_tensor() const;

 private:
  struct TensorSlot {
    std::once_flag once;
    std::vector<Eigen::MatrixXd> tensor;
  };

  std::shared_ptr<const BasisSet> basis_;
  std::shared_ptr<const FieldSampler> sampler_;
  Eigen::MatrixXd stiffness_;
  bool dealiased_ = true;
  std::vector<std::string> warnings_;
  std::shared_ptr<TensorSlot> tensor_;

  void check(const Eigen::VectorXd& g) const;
};

Eigen::MatrixXd assemble_stiffness(const BasisSet& basis);

double trilinear_form(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c);
double trilinear_form(const OperatorSet& ops, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c);

Eigen::VectorXd convection_rhs(const OperatorSet& ops, const Eigen::VectorXd& u,
                               ConvectionPath path = ConvectionPath::Transform);
Eigen::VectorXd damping_rhs(const OperatorSet& ops, const Eigen::VectorXd& u,
                            const PhysicsParams& params);
Eigen::VectorXd forcing_rhs(const BasisSet& basis, const Forcing& f, double t);

/// Largest basis size for which the dense tensor path is offered.
inline constexpr int kMaxTensorModes = 512;

/// max_j |convection_j(tensor) - convection_j(transform)|.
/// Throws std::invalid_argument when m exceeds kMaxTensorModes.
double cross_check_convection(const OperatorSet& ops, const Eigen::VectorXd& u);

/// Binary layout: 8-byte magic "NAVSLIP\0", uint32 version (1), uint32 rank,
/// rank x uint64 extents, then float64 values in row-major order (native
/// little-endian).
void write_stiffness_binary(const OperatorSet& ops, const std::filesystem::path& path);
void write_tensor_binary(const OperatorSet& ops, const std::filesystem::path& path);

}  // namespace navslip
