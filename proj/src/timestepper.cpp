#include "navslip/timestepper.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace navslip {

std::string to_string(Scheme s) { return s == Scheme::ImexCN ? "imex-cn" : "rk4"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "imex-cn" || s == "ImexCN") return Scheme::ImexCN;
  if (s == "rk4" || s == "Rk4Explicit") return Scheme::Rk4Explicit;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected imex-cn or rk4)");
}

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time.dt: dt > 0 required");
  if (!(final_time > dt)) throw std::invalid_argument("time.final_time: T > dt required");
  const double n = final_time / dt;
  if (std::abs(n - std::round(n)) > 1e-9 * n)
    throw std::invalid_argument("time.final_time: T must be an integer multiple of dt");
  if (!(picard_tol > 0.0)) throw std::invalid_argument("time.picard_tol: > 0 required");
  if (picard_max_iter < 1) throw std::invalid_argument("time.picard_max_iter: >= 1 required");
  if (record_every < 1) throw std::invalid_argument("output.record_every: >= 1 required");
  params.validate();
}

SolverError::SolverError(Kind kind, double t, const std::string& what)
    : std::runtime_error(what), kind_(kind), time_(t) {}

GalerkinState initial_projection(const OperatorSet& ops, const VelocityField& u0) {
  if (u0.rows() != static_cast<Eigen::Index>(ops.sampler().nodes()))
    throw std::invalid_argument("initial field is not sampled on the basis grid");
  return {0.0, ops.sampler().project(u0)};
}

GalerkinState initial_projection(const OperatorSet& ops, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != ops.size()) throw std::invalid_argument("initial coefficients do not match basis size");
  return {0.0, coeffs};
}

namespace {

Eigen::VectorXd nonlinear(const OperatorSet& ops, const SolverConfig& c, const Eigen::VectorXd& g) {
  Eigen::VectorXd n = ops.damping(g, c.params);
  if (c.convection) n += ops.convection(g);
  return n;
}

bool has_nonlinearity(const SolverConfig& c) { return c.convection || c.params.damping != 0.0; }

std::size_t step_count(const SolverConfig& c) {
  return static_cast<std::size_t>(std::llround(c.final_time / c.dt));
}

}  // namespace

Eigen::VectorXd galerkin_rhs(const OperatorSet& ops, const SolverConfig& config, const Forcing& f,
                             double t, const Eigen::VectorXd& g) {
  Eigen::VectorXd r = -config.params.viscosity * (ops.stiffness() * g) - nonlinear(ops, config, g);
  if (!f.identically_zero) r += forcing_rhs(ops.basis(), f, t);
  return r;
}

Stepper::Stepper(const OperatorSet& ops, SolverConfig config, Forcing f)
    : ops_(&ops), config_(std::move(config)), forcing_(std::move(f)) {
  config_.params.validate();
  if (!forcing_.coefficients) forcing_ = Forcing::none(ops.size());
  if (config_.scheme == Scheme::ImexCN) {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(ops.size(), ops.size());
    const Eigen::MatrixXd half = 0.5 * config_.dt * config_.params.viscosity * ops.stiffness();
    implicit_.compute(I + half);
    explicit_ = I - half;
  }
}

GalerkinState Stepper::step(const GalerkinState& s, StepInfo* info) const {
  GalerkinState next = config_.scheme == Scheme::ImexCN ? imex_step(s, info) : rk4_step(s);
  if (!next.g.allFinite()) {
    std::ostringstream os;
    os << "non-finite state at t = " << next.t;
    throw SolverError(SolverError::Kind::NonFiniteState, next.t, os.str());
  }
  return next;
}

GalerkinState Stepper::imex_step(const GalerkinState& s, StepInfo* info) const {
  const double dt = config_.dt;
  Eigen::VectorXd base = explicit_ * s.g;
  if (!forcing_.identically_zero) base += dt * forcing_rhs(ops_->basis(), forcing_, s.t + 0.5 * dt);
  GalerkinState next{s.t + dt, s.g};
  if (!has_nonlinearity(config_)) {
    next.g = implicit_.solve(base);
    if (info) *info = {1, 0.0};
    return next;
  }
  // Picard iteration on the end state; the nonlinearity is taken at the
  // midpoint average, which keeps the discrete energy balance exact.
  double update = 0.0;
  for (int k = 1; k <= config_.picard_max_iter; ++k) {
    const Eigen::VectorXd mid = 0.5 * (s.g + next.g);
    Eigen::VectorXd x = implicit_.solve(base - dt * nonlinear(*ops_, config_, mid));
    update = (x - next.g).cwiseAbs().maxCoeff();
    next.g = std::move(x);
    if (!std::isfinite(update)) break;
    if (update <= config_.picard_tol * std::max(1.0, next.g.cwiseAbs().maxCoeff())) {
      if (info) *info = {k, update};
      return next;
    }
  }
  std::ostringstream os;
  os << "Picard iteration did not converge in " << config_.picard_max_iter << " iterations at t = " << s.t
     << " (last update " << update << "); reduce dt";
  throw SolverError(SolverError::Kind::PicardNotConverged, s.t, os.str());
}

GalerkinState Stepper::rk4_step(const GalerkinState& s) const {
  const double dt = config_.dt, t = s.t;
  auto F = [&](double tt, const Eigen::VectorXd& g) { return galerkin_rhs(*ops_, config_, forcing_, tt, g); };
  const Eigen::VectorXd k1 = F(t, s.g);
  const Eigen::VectorXd k2 = F(t + 0.5 * dt, s.g + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = F(t + 0.5 * dt, s.g + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = F(t + dt, s.g + dt * k3);
  return {t + dt, s.g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
}

GalerkinState step(const GalerkinState& state, const OperatorSet& ops, const SolverConfig& config,
                   const Forcing& f) {
  return Stepper(ops, config, f).step(state);
}

double embedding_constant_sq(const BasisSet& basis) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis.h1_gram, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (!(lmin > 0.0)) throw std::runtime_error("H1 form is singular on the basis span");
  return 1.0 / lmin;
}

Trajectory solve(const OperatorSet& ops, const SolverConfig& config, const GalerkinState& initial,
                 const Forcing& f, const StepObserver& observer) {
  config.validate();
  if (initial.g.size() != ops.size()) throw std::invalid_argument("initial state does not match basis size");
  const Forcing forcing = f.coefficients ? f : Forcing::none(ops.size());
  const Stepper stepper(ops, config, forcing);

  Trajectory traj;
  traj.config = config;
  traj.basis_hash = basis_hash(ops.basis());
  traj.states.push_back({0.0, initial.g});

  // a-priori bound ||u0||^2 + (2/mu) C^2 int ||f||^2, tracked for blow-up detection
  const double c2 = forcing.identically_zero ? 0.0 : embedding_constant_sq(ops.basis());
  const double e0 = initial.g.squaredNorm();
  double int_f = 0.0;
  double f_prev = forcing.identically_zero ? 0.0 : forcing.l2_norm_squared(0.0);

  const std::size_t n = step_count(config);
  GalerkinState s{0.0, initial.g};
  for (std::size_t k = 1; k <= n; ++k) {
    StepInfo info;
    GalerkinState next = stepper.step(s, &info);
    next.t = static_cast<double>(k) * config.dt;
    if (!forcing.identically_zero) {
      const double f_next = forcing.l2_norm_squared(next.t);
      int_f += 0.5 * config.dt * (f_prev + f_next);
      f_prev = f_next;
    }
    const double bound = e0 + 2.0 / config.params.viscosity * c2 * int_f;
    if (next.g.norm() > 1e6 * std::sqrt(bound)) {
      std::ostringstream os;
      os << "state norm " << next.g.norm() << " exceeds 1e6 x a-priori energy bound at t = " << next.t;
      throw SolverError(SolverError::Kind::NonFiniteState, next.t, os.str());
    }
    traj.max_picard_iterations = std::max(traj.max_picard_iterations, info.picard_iterations);
    if (observer) observer(next, info);
    s = std::move(next);
    if (k % static_cast<std::size_t>(config.record_every) == 0 || k == n) traj.states.push_back(s);
    traj.steps = static_cast<int>(k);
  }
  return traj;
}

double default_dt(const OperatorSet& ops, SolverConfig config, const GalerkinState& initial, const Forcing& f) {
  if (config.scheme == Scheme::Rk4Explicit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ops.stiffness(), Eigen::EigenvaluesOnly);
    const double lmax = config.params.viscosity * es.eigenvalues().maxCoeff();
    const double limit = 0.25 * 2.785 / lmax;
    return config.final_time / std::ceil(config.final_time / limit);
  }
  const double T = config.final_time;
  double dt = T / std::ceil(std::max(10.0, T / 1e-2));
  config.picard_max_iter = 10;
  for (int halvings = 0; halvings < 30; ++halvings, dt *= 0.5) {
    config.dt = dt;
    try {
      Stepper(ops, config, f).step(initial);
      return dt;
    } catch (const SolverError&) {
    }
  }
  throw std::runtime_error("default_dt: Picard iteration fails to converge even for tiny dt");
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  const Eigen::Index m = traj.states.empty() ? 0 : traj.states.front().g.size();
  out << "t";
  for (Eigen::Index j = 1; j <= m; ++j) out << ",g" << j;
  out << '\n';
  for (const auto& s : traj.states) {
    out << s.t;
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << s.g(j);
    out << '\n';
  }
}

}  // namespace navslip
