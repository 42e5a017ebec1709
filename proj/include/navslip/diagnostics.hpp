#pragma once

#include "navslip/timestepper.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace navslip {

struct LedgerRow {
  double t = 0.0;
  double e_l2 = 0.0;    // ||u||^2
  double e_h1 = 0.0;    // ((u, u))
  double e_damp = 0.0;  // ||u||_{L^{beta+1}}^{beta+1}
  double e_bdry = 0.0;  // int alpha (u.tau)^2 dS
  double i_h1 = 0.0;
  double i_damp = 0.0;
  double i_f = 0.0;     // int ||f||^2
  double forcing_power = 0.0;  // (f(t), u(t)), not part of the CSV
};

struct EnergyLedger {
  PhysicsParams params;
  std::vector<LedgerRow> rows;
  /// max |sum g^2 - quadrature ||u||^2| / max(1, ||u||^2) over the records.
  double l2_crosscheck = 0.0;
};

/// Throws when the trajectory was produced on a different basis or when the
/// coefficient and quadrature L2 energies disagree by more than 1e-10.
EnergyLedger energy_ledger(const Trajectory& traj, const OperatorSet& ops, const PhysicsParams& params,
                           const Forcing& f);
void write_ledger_csv(const EnergyLedger& ledger, const std::filesystem::path& path);

struct EstimateReport {
  std::string identity;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double worst_time = 0.0;
  /// sup_t E_l2 + 2 mu I_h1(T) + 2 theta I_damp(T), for information.
  double literal_lhs = 0.0;
  double embedding_constant_sq = 0.0;

  nlohmann::json to_json() const;
};

/// E(t) + 2 mu I_h1(t) + 2 theta I_damp(t) <= ||u0||^2 + (2/mu) C^2 I_f(t)
/// checked at every record; the report holds the record with least margin.
/// A negative tolerance selects the default 1e-8 (1 + RHS).
EstimateReport check_energy_inequality(const EnergyLedger& ledger, const BasisSet& basis, double u0_l2_sq,
                                       double tol = -1.0);

/// r_n = (E_{n+1} - E_n)/2 + dt * trapezoid(2 mu E_h1 + theta E_damp + mu E_bdry - (f, u)).
/// The ledger must hold every step.
std::vector<double> energy_identity_residuals(const EnergyLedger& ledger, double dt);

/// max over seeded random pairs of |b(u,v,v)| / (||u|| ||v||_{H1}^2).
double check_skew_symmetry(const OperatorSet& ops, int samples, std::uint64_t seed);

/// int (theta |u1|^(beta-1) u1 - theta |u2|^(beta-1) u2) . (u1 - u2) dx
double damping_monotonicity(const OperatorSet& ops, const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                            double beta, double theta);
/// Same functional on an arbitrary grid, e.g. resolved_grid(basis, 8) to
/// measure the aliasing of the non-polynomial integrand.
double damping_monotonicity(const BasisSet& basis, const QuadratureGrid& grid, const Eigen::VectorXd& u1,
                            const Eigen::VectorXd& u2, double beta, double theta);

/// Seeded sample coefficients with amplitudes N(0,1) / (1 + h1_energy_j).
std::vector<Eigen::VectorXd> smooth_samples(const BasisSet& basis, int samples, std::uint64_t seed);

/// Fitted c3: max |b(v, u, v)| / (||v||_{H1}^2 ||u||_{H1}) over sample pairs.
double fit_trilinear_constant(const OperatorSet& ops, int samples, std::uint64_t seed);
/// Fitted C: max sqrt(B(u)^T A^-1 B(u)) / ||u||_{H1}^2 over samples.
double fit_convection_constant(const OperatorSet& ops, int samples, std::uint64_t seed);

struct DerivativeReport {
  double sup_dt_l2 = 0.0;      // sup_t ||u'||
  double int_dt_h1_sq = 0.0;   // int ||u'||_{H1}^2 dt
  double c3_hat = 0.0;
  double min_margin = 0.0;     // min_t (2 mu - c3 ||u||_{H1})
  bool large_viscosity_regime = false;

  nlohmann::json to_json() const;
};

/// u' by second-order finite differences of the recorded states (central in
/// the interior, one-sided at the ends). Needs >= 3 uniformly spaced records.
DerivativeReport derivative_bounds(const Trajectory& traj, const OperatorSet& ops, const PhysicsParams& params,
                                   double c3_hat);

struct GapSeries {
  std::vector<double> t;
  std::vector<double> gap_sq;    // ||u1 - u2||^2
  std::vector<double> exponent;  // int_0^t ||u2||_{L4}^8
};

GapSeries stability_gap(const Trajectory& a, const Trajectory& b, const OperatorSet& ops);

/// |int |u|^p on the basis grid - on a 4x grid| / (4x value).
double lp_aliasing_error(const OperatorSet& ops, const Eigen::VectorXd& g, double p);

}  // namespace navslip
