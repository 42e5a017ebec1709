#include "navslip/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

namespace navslip {

EnergyLedger energy_ledger(const Trajectory& traj, const OperatorSet& ops, const PhysicsParams& params,
                           const Forcing& f) {
  if (!traj.basis_hash.empty() && traj.basis_hash != basis_hash(ops.basis()))
    throw std::invalid_argument("energy_ledger: trajectory was recorded on a different basis");
  params.validate();
  const BasisSet& basis = ops.basis();
  const FieldSampler& s = ops.sampler();
  const bool forced = f.coefficients && !f.identically_zero;

  EnergyLedger ledger;
  ledger.params = params;
  for (const auto& st : traj.states) {
    if (st.g.size() != ops.size()) throw std::invalid_argument("energy_ledger: state length mismatch");
    LedgerRow r;
    r.t = st.t;
    r.e_l2 = st.g.squaredNorm();
    const double quad = s.weights().dot(s.evaluate(st.g).rowwise().squaredNorm());
    ledger.l2_crosscheck = std::max(ledger.l2_crosscheck, std::abs(quad - r.e_l2) / std::max(1.0, r.e_l2));
    r.e_h1 = st.g.dot(basis.h1_gram * st.g);
    r.e_damp = ops.lp_norm_pow(st.g, params.exponent + 1.0);
    r.e_bdry = st.g.dot(basis.boundary_gram * st.g);
    if (forced) {
      r.forcing_power = forcing_rhs(basis, f, st.t).dot(st.g);
      r.i_f = f.l2_norm_squared(st.t);  // integrated below
    }
    ledger.rows.push_back(r);
  }
  if (ledger.l2_crosscheck > 1e-10)
    throw std::runtime_error("energy_ledger: coefficient and quadrature L2 energies disagree");

  double fprev = ledger.rows.empty() ? 0.0 : ledger.rows.front().i_f;
  for (std::size_t n = 0; n < ledger.rows.size(); ++n) {
    LedgerRow& r = ledger.rows[n];
    const double fcur = r.i_f;
    if (n == 0) {
      r.i_h1 = r.i_damp = r.i_f = 0.0;
      continue;
    }
    const LedgerRow& p = ledger.rows[n - 1];
    const double dt = r.t - p.t;
    r.i_h1 = p.i_h1 + 0.5 * dt * (p.e_h1 + r.e_h1);
    r.i_damp = p.i_damp + 0.5 * dt * (p.e_damp + r.e_damp);
    r.i_f = p.i_f + 0.5 * dt * (fprev + fcur);
    fprev = fcur;
  }
  return ledger;
}

void write_ledger_csv(const EnergyLedger& ledger, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17) << "t,E_l2,E_h1,E_damp,E_bdry,I_h1,I_damp,I_f\n";
  for (const auto& r : ledger.rows)
    out << r.t << ',' << r.e_l2 << ',' << r.e_h1 << ',' << r.e_damp << ',' << r.e_bdry << ',' << r.i_h1 << ','
        << r.i_damp << ',' << r.i_f << '\n';
}

nlohmann::json EstimateReport::to_json() const {
  return {{"identity", identity}, {"lhs", lhs},           {"rhs", rhs},
          {"margin", margin},     {"pass", pass},         {"tolerance", tolerance},
          {"worst_time", worst_time}, {"literal_lhs", literal_lhs},
          {"embedding_constant_sq", embedding_constant_sq}};
}

EstimateReport check_energy_inequality(const EnergyLedger& ledger, const BasisSet& basis, double u0_l2_sq,
                                       double tol) {
  EstimateReport rep;
  rep.identity =
      "E_l2(t) + 2 mu I_h1(t) + 2 theta I_damp(t) <= ||u0||^2 + (2/mu) C^2 I_f(t) for all recorded t";
  if (ledger.rows.empty()) throw std::invalid_argument("check_energy_inequality: empty ledger");
  const double mu = ledger.params.viscosity, theta = ledger.params.damping;
  const double i_f_total = ledger.rows.back().i_f;
  rep.embedding_constant_sq = i_f_total > 0.0 ? embedding_constant_sq(basis) : 0.0;

  double sup_e = 0.0;
  rep.margin = std::numeric_limits<double>::infinity();
  for (const auto& r : ledger.rows) {
    sup_e = std::max(sup_e, r.e_l2);
    const double lhs = r.e_l2 + 2.0 * mu * r.i_h1 + 2.0 * theta * r.i_damp;
    const double rhs = u0_l2_sq + 2.0 / mu * rep.embedding_constant_sq * r.i_f;
    if (rhs - lhs < rep.margin) {
      rep.margin = rhs - lhs;
      rep.lhs = lhs;
      rep.rhs = rhs;
      rep.worst_time = r.t;
    }
  }
  const auto& last = ledger.rows.back();
  rep.literal_lhs = sup_e + 2.0 * mu * last.i_h1 + 2.0 * theta * last.i_damp;
  rep.tolerance = tol >= 0.0 ? tol : 1e-8 * (1.0 + rep.rhs);
  rep.pass = rep.margin >= -rep.tolerance;
  return rep;
}

std::vector<double> energy_identity_residuals(const EnergyLedger& ledger, double dt) {
  const double mu = ledger.params.viscosity, theta = ledger.params.damping;
  std::vector<double> out;
  for (std::size_t n = 1; n < ledger.rows.size(); ++n) {
    const LedgerRow &a = ledger.rows[n - 1], &b = ledger.rows[n];
    if (std::abs((b.t - a.t) - dt) > 1e-9 * dt)
      throw std::invalid_argument("energy_identity_residuals: ledger must record every step");
    auto rate = [&](const LedgerRow& r) {
      return 2.0 * mu * r.e_h1 + theta * r.e_damp + mu * r.e_bdry - r.forcing_power;
    };
    out.push_back(0.5 * (b.e_l2 - a.e_l2) + dt * 0.5 * (rate(a) + rate(b)));
  }
  return out;
}

namespace {

Eigen::VectorXd normal_vector(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd g(m);
  for (int i = 0; i < m; ++i) g(i) = n(rng);
  return g;
}

double h1(const BasisSet& b, const Eigen::VectorXd& g) { return std::sqrt(std::max(0.0, g.dot(b.h1_gram * g))); }

}  // namespace

double check_skew_symmetry(const OperatorSet& ops, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd u = normal_vector(rng, ops.size()), v = normal_vector(rng, ops.size());
    const double scale = u.norm() * std::pow(h1(ops.basis(), v), 2);
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(ops.trilinear(u, v, v)) / scale);
  }
  return worst;
}

double damping_monotonicity(const OperatorSet& ops, const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                            double beta, double theta) {
  const PhysicsParams p{1.0, theta, beta};
  p.validate();
  // u1 - u2 lies in the span, so the projected difference paired with it is the
  // full quadrature integral
  return (ops.damping(u1, p) - ops.damping(u2, p)).dot(u1 - u2);
}

double damping_monotonicity(const BasisSet& basis, const QuadratureGrid& grid, const Eigen::VectorXd& u1,
                            const Eigen::VectorXd& u2, double beta, double theta) {
  PhysicsParams{1.0, theta, beta}.validate();
  const VelocityField a = evaluate_field(basis, u1, grid), b = evaluate_field(basis, u2, grid);
  double total = 0.0;
  for (Eigen::Index q = 0; q < a.rows(); ++q) {
    const Eigen::Vector3d x = a.row(q).transpose(), y = b.row(q).transpose();
    const double sx = x.norm() == 0.0 ? 0.0 : std::pow(x.norm(), beta - 1.0);
    const double sy = y.norm() == 0.0 ? 0.0 : std::pow(y.norm(), beta - 1.0);
    total += grid.weight(static_cast<std::size_t>(q)) * theta * (sx * x - sy * y).dot(x - y);
  }
  return total;
}

std::vector<Eigen::VectorXd> smooth_samples(const BasisSet& basis, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd g = normal_vector(rng, basis.size());
    for (int j = 0; j < basis.size(); ++j) g(j) /= 1.0 + basis.modes[j].h1_energy;
    out.push_back(std::move(g));
  }
  return out;
}

double fit_trilinear_constant(const OperatorSet& ops, int samples, std::uint64_t seed) {
  const auto us = smooth_samples(ops.basis(), samples, seed);
  const auto vs = smooth_samples(ops.basis(), samples, seed + 1);
  double c = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double scale = std::pow(h1(ops.basis(), vs[s]), 2) * h1(ops.basis(), us[s]);
    if (scale > 0.0) c = std::max(c, std::abs(ops.trilinear(vs[s], us[s], vs[s])) / scale);
  }
  return c;
}

double fit_convection_constant(const OperatorSet& ops, int samples, std::uint64_t seed) {
  const Eigen::LLT<Eigen::MatrixXd> riesz(ops.stiffness());
  double c = 0.0;
  for (const auto& u : smooth_samples(ops.basis(), samples, seed)) {
    const Eigen::VectorXd r = ops.convection(u);
    const double dual = std::sqrt(std::max(0.0, r.dot(riesz.solve(r))));
    const double scale = std::pow(h1(ops.basis(), u), 2);
    if (scale > 0.0) c = std::max(c, dual / scale);
  }
  return c;
}

nlohmann::json DerivativeReport::to_json() const {
  return {{"sup_dt_l2", sup_dt_l2},
          {"int_dt_h1_sq", int_dt_h1_sq},
          {"c3_hat", c3_hat},
          {"min_margin", min_margin},
          {"regime", large_viscosity_regime ? "inside fitted large-viscosity regime"
                                            : "outside fitted large-viscosity regime"}};
}

DerivativeReport derivative_bounds(const Trajectory& traj, const OperatorSet& ops, const PhysicsParams& params,
                                   double c3_hat) {
  const auto& S = traj.states;
  if (S.size() < 3) throw std::invalid_argument("derivative_bounds: at least 3 records required");
  const double h = S[1].t - S[0].t;
  for (std::size_t n = 1; n < S.size(); ++n)
    if (std::abs((S[n].t - S[n - 1].t) - h) > 1e-9 * h)
      throw std::invalid_argument("derivative_bounds: records must be uniformly spaced");

  const std::size_t N = S.size();
  std::vector<double> dl2(N), dh1(N);
  for (std::size_t n = 0; n < N; ++n) {
    Eigen::VectorXd d;
    if (n == 0)
      d = (-3.0 * S[0].g + 4.0 * S[1].g - S[2].g) / (2.0 * h);
    else if (n == N - 1)
      d = (3.0 * S[N - 1].g - 4.0 * S[N - 2].g + S[N - 3].g) / (2.0 * h);
    else
      d = (S[n + 1].g - S[n - 1].g) / (2.0 * h);
    dl2[n] = d.norm();
    dh1[n] = d.dot(ops.basis().h1_gram * d);
  }
  DerivativeReport rep;
  rep.c3_hat = c3_hat;
  rep.sup_dt_l2 = *std::max_element(dl2.begin(), dl2.end());
  for (std::size_t n = 1; n < N; ++n) rep.int_dt_h1_sq += 0.5 * h * (dh1[n - 1] + dh1[n]);
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : S)
    rep.min_margin = std::min(rep.min_margin, 2.0 * params.viscosity - c3_hat * h1(ops.basis(), s.g));
  rep.large_viscosity_regime = rep.min_margin > 0.0;
  return rep;
}

GapSeries stability_gap(const Trajectory& a, const Trajectory& b, const OperatorSet& ops) {
  if (a.states.size() != b.states.size()) throw std::invalid_argument("stability_gap: time-grid mismatch");
  GapSeries out;
  double integral = 0.0, prev = 0.0;
  for (std::size_t n = 0; n < a.states.size(); ++n) {
    const auto &sa = a.states[n], &sb = b.states[n];
    if (sa.t != sb.t || sa.g.size() != ops.size() || sb.g.size() != ops.size())
      throw std::invalid_argument("stability_gap: time-grid mismatch");
    const double l4 = std::pow(ops.lp_norm_pow(sb.g, 4.0), 2.0);
    if (n > 0) integral += 0.5 * (sa.t - out.t.back()) * (prev + l4);
    prev = l4;
    out.t.push_back(sa.t);
    out.gap_sq.push_back((sa.g - sb.g).squaredNorm());
    out.exponent.push_back(integral);
  }
  return out;
}

double lp_aliasing_error(const OperatorSet& ops, const Eigen::VectorXd& g, double p) {
  const BasisSet& basis = ops.basis();
  const QuadratureGrid fine = resolved_grid(basis, 4.0 * basis.grid.oversampling);
  const VelocityField u = evaluate_field(basis, g, fine);
  double ref = 0.0;
  for (std::size_t q = 0; q < fine.size(); ++q)
    ref += fine.weight(q) * std::pow(u.row(static_cast<Eigen::Index>(q)).norm(), p);
  const double coarse = ops.lp_norm_pow(g, p);
  return ref == 0.0 ? std::abs(coarse) : std::abs(coarse - ref) / ref;
}

}  // namespace navslip
