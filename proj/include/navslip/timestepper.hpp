#pragma once

#include "navslip/operators.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace navslip {

inline constexpr const char* kVersion = "0.1.0";

enum class Scheme { ImexCN, Rk4Explicit };
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SolverConfig {
  double dt = 1e-3;
  double final_time = 1.0;
  Scheme scheme = Scheme::ImexCN;
  double picard_tol = 1e-10;
  int picard_max_iter = 50;
  PhysicsParams params;
  int record_every = 1;
  /// Turns the convection term off (linear or Stokes-type runs).
  bool convection = true;

  void validate() const;
};

struct GalerkinState {
  double t = 0.0;
  Eigen::VectorXd g;
};

struct StepInfo {
  int picard_iterations = 0;
  double picard_update = 0.0;
};

struct Trajectory {
  std::vector<GalerkinState> states;
  SolverConfig config;
  std::string basis_hash;
  int steps = 0;
  int max_picard_iterations = 0;
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { PicardNotConverged, NonFiniteState };
  SolverError(Kind kind, double t, const std::string& what);
  Kind kind() const { return kind_; }
  double time() const { return time_; }

 private:
  Kind kind_;
  double time_;
};

/// g = (u0, w_j), u0 sampled on the basis grid.
GalerkinState initial_projection(const OperatorSet& ops, const VelocityField& u0);
GalerkinState initial_projection(const OperatorSet& ops, const Eigen::VectorXd& coeffs);

/// Right-hand side of g' = -mu A g - B(g) - D(g) + f(t).
Eigen::VectorXd galerkin_rhs(const OperatorSet& ops, const SolverConfig& config, const Forcing& f,
                             double t, const Eigen::VectorXd& g);

/// Reusable integrator; holds the Crank-Nicolson factorization for one dt.
class Stepper {
 public:
  Stepper(const OperatorSet& ops, SolverConfig config, Forcing f);

  GalerkinState step(const GalerkinState& s, StepInfo* info = nullptr) const;
  const SolverConfig& config() const { return config_; }

 private:
  const OperatorSet* ops_;
  SolverConfig config_;
  Forcing forcing_;
  Eigen::LDLT<Eigen::MatrixXd> implicit_;
  Eigen::MatrixXd explicit_;

  GalerkinState imex_step(const GalerkinState& s, StepInfo* info) const;
  GalerkinState rk4_step(const GalerkinState& s) const;
};

GalerkinState step(const GalerkinState& state, const OperatorSet& ops, const SolverConfig& config,
                   const Forcing& f);

/// C^2 with C the L2-vs-H1 embedding constant on the basis span.
double embedding_constant_sq(const BasisSet& basis);

using StepObserver = std::function<void(const GalerkinState&, const StepInfo&)>;

Trajectory solve(const OperatorSet& ops, const SolverConfig& config, const GalerkinState& initial,
                 const Forcing& f, const StepObserver& observer = {});

/// Explicit runs: a quarter of the RK4 stability limit on the largest
/// eigenvalue of mu A. ImexCN: starting from min(T/10, 1e-2), halved until
/// the first step converges within 10 Picard iterations.
double default_dt(const OperatorSet& ops, SolverConfig config, const GalerkinState& initial,
                  const Forcing& f);

/// CSV columns t, g1..gm at 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace navslip
