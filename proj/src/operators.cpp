#include "navslip/operators.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace navslip {

void PhysicsParams::validate() const {
  if (!(viscosity > 0.0) || !std::isfinite(viscosity))
    throw std::invalid_argument("physics.viscosity: μ > 0 required");
  if (!(damping >= 0.0) || !std::isfinite(damping))
    throw std::invalid_argument("physics.damping: ϑ ≥ 0 required");
  if (!(exponent >= 1.0) || !std::isfinite(exponent))
    throw std::invalid_argument("physics.exponent: β ≥ 1 required");
}

Forcing Forcing::none(int m) {
  Forcing f;
  f.coefficients = [m](double) { return Eigen::VectorXd::Zero(m).eval(); };
  f.l2_norm_squared = [](double) { return 0.0; };
  f.identically_zero = true;
  return f;
}

Forcing Forcing::constant(Eigen::VectorXd coeffs) {
  Forcing f;
  const double n2 = coeffs.squaredNorm();
  f.coefficients = [c = std::move(coeffs)](double) { return c; };
  f.l2_norm_squared = [n2](double) { return n2; };
  f.identically_zero = n2 == 0.0;
  return f;
}

Forcing Forcing::from_field(std::shared_ptr<const FieldSampler> sampler,
                            std::function<VelocityField(double)> field) {
  Forcing f;
  f.coefficients = [sampler, field](double t) { return sampler->project(field(t)); };
  f.l2_norm_squared = [sampler, field](double t) {
    const VelocityField u = field(t);
    return sampler->weights().dot(u.rowwise().squaredNorm());
  };
  return f;
}

namespace {

// Cubic integrand exactness: trapezoid rule on n nodes is exact for
// frequencies below n, GLL on n nodes for degree <= 2n - 3.
bool grid_dealiases(const BasisSet& basis, const QuadratureGrid& grid) {
  const bool slab = basis.domain.geometry == Geometry::Slab;
  for (int a = 0; a < 3; ++a) {
    if (a == 2 && slab) {
      if (2 * grid.n[2] - 3 < 3 * basis.resolution.profile_degree) return false;
    } else if (basis.resolution.max_wavenumber[a] > 0 &&
               grid.n[a] < 3 * basis.resolution.max_wavenumber[a] + 1) {
      return false;
    }
  }
  return true;
}

}  // namespace

OperatorSet::OperatorSet(const BasisSet& basis)
    : basis_(std::make_shared<const BasisSet>(basis)),
      sampler_(std::make_shared<const FieldSampler>(*basis_)),
      stiffness_(assemble_stiffness(basis)),
      tensor_(std::make_shared<TensorSlot>()) {
  dealiased_ = grid_dealiases(basis, basis.grid);
  if (!dealiased_) {
    std::ostringstream os;
    os << "quadrature grid does not dealias the convection term (oversampling "
       << basis.grid.oversampling << " < 3/2); transform-path results are aliased";
    warnings_.push_back(os.str());
  }
}

void OperatorSet::check(const Eigen::VectorXd& g) const {
  if (g.size() != size()) throw std::invalid_argument("coefficient vector length does not match basis size");
}

Eigen::VectorXd OperatorSet::convection(const Eigen::VectorXd& g, ConvectionPath path) const {
  check(g);
  const int m = size();
  if (path == ConvectionPath::Tensor) {
    const auto& T = convection_tensor();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
      if (g(i) == 0.0) continue;
      out.noalias() += g(i) * (T[i].transpose() * g);
    }
    return out;
  }
  const FieldSampler& s = *sampler_;
  std::array<Eigen::VectorXd, 3> u;
  for (int c = 0; c < 3; ++c) u[c].noalias() = s.value(c) * g;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd nl(s.nodes()), grad(s.nodes());
  for (int c = 0; c < 3; ++c) {
    nl.setZero();
    for (int d = 0; d < 3; ++d) {
      grad.noalias() = s.gradient(c, d) * g;
      nl.array() += u[d].array() * grad.array();
    }
    nl.array() *= s.weights().array();
    out.noalias() += s.value(c).transpose() * nl;
  }
  return out;
}

Eigen::VectorXd OperatorSet::damping(const Eigen::VectorXd& g, const PhysicsParams& params) const {
  check(g);
  if (params.damping == 0.0) return Eigen::VectorXd::Zero(size());
  const FieldSampler& s = *sampler_;
  const VelocityField u = s.evaluate(g);
  Eigen::VectorXd factor(s.nodes());
  const double p = params.exponent - 1.0;
  for (Eigen::Index q = 0; q < factor.size(); ++q) {
    // |u|^(beta-1) u extends continuously by 0 at u = 0
    const double mag = u.row(q).norm();
    factor(q) = p == 0.0 ? 1.0 : (mag == 0.0 ? 0.0 : std::pow(mag, p));
  }
  factor.array() *= params.damping * s.weights().array();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int c = 0; c < 3; ++c) out.noalias() += s.value(c).transpose() * factor.cwiseProduct(u.col(c));
  return out;
}

double OperatorSet::trilinear(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& c) const {
  check(a);
  check(b);
  check(c);
  const FieldSampler& s = *sampler_;
  const VelocityField ua = s.evaluate(a);
  const VelocityField uc = s.evaluate(c);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd adv = Eigen::VectorXd::Zero(s.nodes());
    for (int d = 0; d < 3; ++d) adv.array() += ua.col(d).array() * (s.gradient(i, d) * b).array();
    total += s.weights().dot(adv.cwiseProduct(uc.col(i)));
  }
  return total;
}

double OperatorSet::lp_norm_pow(const Eigen::VectorXd& g, double p) const {
  check(g);
  const VelocityField u = sampler_->evaluate(g);
  double total = 0.0;
  for (Eigen::Index q = 0; q < u.rows(); ++q) total += sampler_->weights()(q) * std::pow(u.row(q).norm(), p);
  return total;
}

const std::vector<Eigen::MatrixXd>& OperatorSet::convection_tensor() const {
  if (size() > kMaxTensorModes)
    throw std::invalid_argument("dense convection tensor unavailable for m > " +
                                std::to_string(kMaxTensorModes));
  std::call_once(tensor_->once, [this] {
    const BasisSet& basis = *basis_;
    std::shared_ptr<const FieldSampler> exact = sampler_;
    if (!grid_dealiases(basis, basis.grid) || basis.grid.oversampling < 2.0)
      exact = std::make_shared<const FieldSampler>(basis, resolved_grid(basis, 2.0));
    const FieldSampler& s = *exact;
    const int m = size();
    const Eigen::Index Q = static_cast<Eigen::Index>(s.nodes());
    std::vector<Eigen::MatrixXd> T(m);
    Eigen::MatrixXd adv(Q, m), weighted(Q, m);
    for (int i = 0; i < m; ++i) {
      T[i].setZero(m, m);
      for (int c = 0; c < 3; ++c) {
        adv.setZero();
        for (int d = 0; d < 3; ++d) adv.noalias() += s.value(d).col(i).asDiagonal() * s.gradient(c, d);
        weighted.noalias() = s.weights().asDiagonal() * s.value(c);
        T[i].noalias() += adv.transpose() * weighted;
      }
    }
    tensor_->tensor = std::move(T);
  });
  return tensor_->tensor;
}

Eigen::MatrixXd assemble_stiffness(const BasisSet& basis) {
  Eigen::MatrixXd A = 2.0 * basis.h1_gram + basis.boundary_gram;
  return 0.5 * (A + A.transpose());
}

double trilinear_form(const BasisSet& basis, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c) {
  return OperatorSet(basis).trilinear(a, b, c);
}

double trilinear_form(const OperatorSet& ops, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c) {
  return ops.trilinear(a, b, c);
}

Eigen::VectorXd convection_rhs(const OperatorSet& ops, const Eigen::VectorXd& u, ConvectionPath path) {
  return ops.convection(u, path);
}

Eigen::VectorXd damping_rhs(const OperatorSet& ops, const Eigen::VectorXd& u, const PhysicsParams& params) {
  params.validate();
  return ops.damping(u, params);
}

Eigen::VectorXd forcing_rhs(const BasisSet& basis, const Forcing& f, double t) {
  Eigen::VectorXd c = f.coefficients(t);
  if (c.size() != basis.size()) throw std::invalid_argument("forcing coefficient length does not match basis size");
  return c;
}

double cross_check_convection(const OperatorSet& ops, const Eigen::VectorXd& u) {
  if (ops.size() > kMaxTensorModes)
    throw std::invalid_argument("cross_check_convection: tensor path unavailable for this m");
  const Eigen::VectorXd a = ops.convection(u, ConvectionPath::Tensor);
  const Eigen::VectorXd b = ops.convection(u, ConvectionPath::Transform);
  return (a - b).cwiseAbs().maxCoeff();
}

namespace {

void write_array(const std::filesystem::path& path, const std::vector<std::uint64_t>& extents,
                 const std::function<void(std::ofstream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const char magic[8] = {'N', 'A', 'V', 'S', 'L', 'I', 'P', '\0'};
  out.write(magic, 8);
  const std::uint32_t version = 1, rank = static_cast<std::uint32_t>(extents.size());
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&rank), sizeof rank);
  for (std::uint64_t e : extents) out.write(reinterpret_cast<const char*>(&e), sizeof e);
  body(out);
}

void put(std::ofstream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

}  // namespace

void write_stiffness_binary(const OperatorSet& ops, const std::filesystem::path& path) {
  const auto m = static_cast<std::uint64_t>(ops.size());
  write_array(path, {m, m}, [&](std::ofstream& out) {
    for (int i = 0; i < ops.size(); ++i)
      for (int j = 0; j < ops.size(); ++j) put(out, ops.stiffness()(i, j));
  });
}

void write_tensor_binary(const OperatorSet& ops, const std::filesystem::path& path) {
  const auto& T = ops.convection_tensor();
  const auto m = static_cast<std::uint64_t>(ops.size());
  write_array(path, {m, m, m}, [&](std::ofstream& out) {
    for (int i = 0; i < ops.size(); ++i)
      for (int l = 0; l < ops.size(); ++l)
        for (int j = 0; j < ops.size(); ++j) put(out, T[i](l, j));
  });
}

}  // namespace navslip
