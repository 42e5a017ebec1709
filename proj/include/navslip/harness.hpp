#pragma once

#include "navslip/diagnostics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace navslip {

/// g_mode(t) = amplitude * exp(-decay t) * sin(omega t + phase)
struct MmsTerm {
  int mode = 0;
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
  double decay = 0.0;
};

/// Manufactured solution in the basis span; the forcing is built in
/// coefficient form so the pressure never appears.
struct MmsCase {
  std::string id = "custom";
  std::vector<MmsTerm> terms;
  PhysicsParams params;

  Eigen::VectorXd exact(double t, int m) const;
  Eigen::VectorXd exact_rate(double t, int m) const;

  /// sin(t) w1 + cos(t) w2 with the given physics.
  static MmsCase standard(const PhysicsParams& params);
  /// Lookup by id ("standard"); throws for unknown ids.
  static MmsCase by_id(const std::string& id, const PhysicsParams& params);
};

/// f* = g*' + mu A g* + B(g*) + D(g*)
Eigen::VectorXd mms_forcing(const MmsCase& c, const OperatorSet& ops, double t);
Forcing make_mms_forcing(const MmsCase& c, const OperatorSet& ops);

struct StudyReport {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  std::vector<double> refinement;
  std::vector<double> errors;
  double order = 0.0;
  bool pass = false;
  bool informational = false;
  std::vector<std::string> notes;
  nlohmann::json extra = nlohmann::json::object();
  nlohmann::json manifest = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Least-squares slope of log(error) against log(h).
double fit_order(const std::vector<double>& h, const std::vector<double>& errors);

/// Needs >= 3 dt values, each half the previous. Error is the max over
/// all steps of ||g_n - g*(t_n)||. Pass band: [1.9, 2.1] for ImexCN,
/// [3.8, 4.2] for RK4.
StudyReport temporal_convergence_study(const MmsCase& c, const OperatorSet& ops, Scheme scheme,
                                       const std::vector<double>& dts, double final_time,
                                       double picard_tol = 1e-13, bool serial = false);

/// Seeded initial data.
struct InitialSpec {
  enum class Kind { Zero, Modes, Random };
  Kind kind = Kind::Zero;
  std::vector<std::pair<int, double>> modes;  // (0-based index, coefficient)
  std::uint64_t seed = 0;
  double decay = 0.5;      // amplitude ~ exp(-decay * h1_energy)
  double amplitude = 1.0;
  int reference_modes = 128;

  nlohmann::json to_json() const;
};

/// Random data is a field on a reference basis of max(reference_modes, m)
/// modes, so the same field is projected onto every resolution.
Eigen::VectorXd initial_coefficients(const InitialSpec& spec, const OperatorSet& ops);

/// Runs each m in `ms` and compares u_m(T) with the finest run by
/// quadrature on the finest grid. Pass: errors strictly decrease, each
/// refinement reduces the error by >= 2.
StudyReport spatial_convergence_study(const DomainSpec& domain, const std::vector<int>& ms,
                                      const SolverConfig& config, const InitialSpec& initial,
                                      const GridRequest& grid = {}, bool informational = false,
                                      bool serial = false);

/// Perturbs u0 by eps * delta (delta a seeded unit vector) for each eps,
/// reports ||u_eps(T) - u_0(T)||^2 and the per-halving ratios.
StudyReport twin_run(const OperatorSet& ops, const SolverConfig& config, const Eigen::VectorXd& u0,
                     const std::vector<double>& eps, std::uint64_t seed, const Forcing& f = {},
                     bool serial = false);

}  // namespace navslip
