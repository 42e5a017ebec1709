#include "navslip/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace navslip {

Eigen::VectorXd MmsCase::exact(double t, int m) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  for (const auto& term : terms) {
    if (term.mode < 0 || term.mode >= m) throw std::invalid_argument("MMS case '" + id + "' is not in the basis span");
    g(term.mode) += term.amplitude * std::exp(-term.decay * t) * std::sin(term.omega * t + term.phase);
  }
  return g;
}

Eigen::VectorXd MmsCase::exact_rate(double t, int m) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  for (const auto& term : terms) {
    if (term.mode < 0 || term.mode >= m) throw std::invalid_argument("MMS case '" + id + "' is not in the basis span");
    const double arg = term.omega * t + term.phase;
    g(term.mode) += term.amplitude * std::exp(-term.decay * t) *
                    (term.omega * std::cos(arg) - term.decay * std::sin(arg));
  }
  return g;
}

MmsCase MmsCase::standard(const PhysicsParams& params) {
  MmsCase c;
  c.id = "standard";
  c.terms = {{0, 1.0, 1.0, 0.0, 0.0}, {1, 1.0, 1.0, 0.5 * std::numbers::pi, 0.0}};
  c.params = params;
  return c;
}

MmsCase MmsCase::by_id(const std::string& id, const PhysicsParams& params) {
  if (id == "standard") return standard(params);
  throw std::invalid_argument("unknown MMS case id '" + id + "' (known: standard)");
}

Eigen::VectorXd mms_forcing(const MmsCase& c, const OperatorSet& ops, double t) {
  const int m = ops.size();
  const Eigen::VectorXd g = c.exact(t, m);
  return c.exact_rate(t, m) + c.params.viscosity * (ops.stiffness() * g) + ops.convection(g) +
         ops.damping(g, c.params);
}

Forcing make_mms_forcing(const MmsCase& c, const OperatorSet& ops) {
  c.exact(0.0, ops.size());  // span check
  Forcing f;
  f.coefficients = [c, &ops](double t) { return mms_forcing(c, ops, t); };
  // f* lies in the span, so its L2 norm is the coefficient norm
  f.l2_norm_squared = [c, &ops](double t) { return mms_forcing(c, ops, t).squaredNorm(); };
  return f;
}

nlohmann::json StudyReport::to_json() const {
  nlohmann::json j = {{"kind", kind},     {"params", params}, {"refinement", refinement},
                      {"errors", errors}, {"order", order},   {"pass", pass},
                      {"informational", informational}, {"notes", notes}, {"manifest", manifest}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

double fit_order(const std::vector<double>& h, const std::vector<double>& errors) {
  if (h.size() != errors.size() || h.size() < 2) throw std::invalid_argument("fit_order: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

template <class T, class F>
std::vector<T> run_all(std::size_t n, F&& fn, bool serial) {
  std::vector<T> out(n);
  if (serial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::future<T>> futs;
  for (std::size_t i = 0; i < n; ++i) futs.push_back(std::async(std::launch::async, [&fn, i] { return fn(i); }));
  for (std::size_t i = 0; i < n; ++i) out[i] = futs[i].get();
  return out;
}

void require_halving(const std::vector<double>& v, const char* what) {
  if (v.size() < 3) throw std::invalid_argument(std::string(what) + ": insufficient refinement (need >= 3 values)");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > 0.0) || std::abs(v[i - 1] / v[i] - 2.0) > 1e-9)
      throw std::invalid_argument(std::string(what) + ": each value must halve the previous one");
}

nlohmann::json params_json(const PhysicsParams& p) {
  return {{"viscosity", p.viscosity}, {"damping", p.damping}, {"exponent", p.exponent}};
}

}  // namespace

StudyReport temporal_convergence_study(const MmsCase& c, const OperatorSet& ops, Scheme scheme,
                                       const std::vector<double>& dts, double final_time, double picard_tol,
                                       bool serial) {
  require_halving(dts, "temporal_convergence_study");
  const Forcing f = make_mms_forcing(c, ops);
  const int m = ops.size();

  StudyReport rep;
  rep.kind = "temporal-convergence";
  rep.params = {{"case", c.id},       {"scheme", to_string(scheme)}, {"final_time", final_time},
                {"modes", m},         {"picard_tol", picard_tol},    {"physics", params_json(c.params)}};
  rep.refinement = dts;
  rep.errors = run_all<double>(
      dts.size(),
      [&](std::size_t i) {
        SolverConfig cfg;
        cfg.dt = dts[i];
        cfg.final_time = final_time;
        cfg.scheme = scheme;
        cfg.picard_tol = picard_tol;
        cfg.params = c.params;
        double worst = 0.0;
        solve(ops, cfg, {0.0, c.exact(0.0, m)}, f, [&](const GalerkinState& s, const StepInfo&) {
          worst = std::max(worst, (s.g - c.exact(s.t, m)).norm());
        });
        return worst;
      },
      serial);
  SolverConfig at_zero;
  at_zero.params = c.params;
  rep.extra["mms_residual_t0"] =
      (galerkin_rhs(ops, at_zero, f, 0.0, c.exact(0.0, m)) - c.exact_rate(0.0, m)).cwiseAbs().maxCoeff();
  bool monotone = true;
  for (std::size_t i = 1; i < rep.errors.size(); ++i) monotone &= rep.errors[i] < rep.errors[i - 1];
  if (!monotone) rep.notes.push_back("non-monotone error sequence: dt outside the asymptotic range");
  rep.order = fit_order(rep.refinement, rep.errors);
  const double lo = scheme == Scheme::ImexCN ? 1.9 : 3.8, hi = scheme == Scheme::ImexCN ? 2.1 : 4.2;
  rep.extra["expected_order"] = {lo, hi};
  rep.pass = monotone && rep.order >= lo && rep.order <= hi;
  return rep;
}

nlohmann::json InitialSpec::to_json() const {
  switch (kind) {
    case Kind::Zero: return {{"kind", "zero"}};
    case Kind::Modes: {
      nlohmann::json ms = nlohmann::json::array();
      for (const auto& [i, a] : modes) ms.push_back({{"index", i}, {"amplitude", a}});
      return {{"kind", "modes"}, {"modes", ms}};
    }
    case Kind::Random:
      return {{"kind", "random"},       {"seed", seed},
              {"decay", decay},         {"amplitude", amplitude},
              {"reference_modes", reference_modes}};
  }
  return {};
}

Eigen::VectorXd initial_coefficients(const InitialSpec& spec, const OperatorSet& ops) {
  const int m = ops.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  switch (spec.kind) {
    case InitialSpec::Kind::Zero: return g;
    case InitialSpec::Kind::Modes:
      for (const auto& [i, a] : spec.modes) {
        if (i < 0 || i >= m) throw std::invalid_argument("initial.modes: index outside the basis");
        g(i) += a;
      }
      return g;
    case InitialSpec::Kind::Random: break;
  }
  const BasisSet& basis = ops.basis();
  const BasisSet ref = build_basis(basis.domain, std::max(spec.reference_modes, m));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd c(ref.size());
  for (int j = 0; j < ref.size(); ++j)
    c(j) = spec.amplitude * normal(rng) * std::exp(-spec.decay * ref.modes[j].h1_energy);
  const QuadratureGrid& grid = ref.grid;
  return project_field(basis, evaluate_field(ref, c, grid), grid);
}

StudyReport spatial_convergence_study(const DomainSpec& domain, const std::vector<int>& ms,
                                      const SolverConfig& config, const InitialSpec& initial,
                                      const GridRequest& grid, bool informational, bool serial) {
  if (ms.size() < 2) throw std::invalid_argument("spatial_convergence_study: need >= 2 resolutions");
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (ms[i] <= ms[i - 1]) throw std::invalid_argument("spatial_convergence_study: m sequence must increase");
  config.validate();

  struct Run {
    std::shared_ptr<BasisSet> basis;
    Eigen::VectorXd final_g;
    double cross_check = 0.0;
  };
  auto runs = run_all<Run>(
      ms.size(),
      [&](std::size_t i) {
        Run r;
        r.basis = std::make_shared<BasisSet>(build_basis(domain, ms[i], grid));
        const OperatorSet ops(*r.basis);
        const Eigen::VectorXd g0 = initial_coefficients(initial, ops);
        if (i == 0 && ops.size() <= kMaxTensorModes) r.cross_check = cross_check_convection(ops, g0);
        r.final_g = solve(ops, config, {0.0, g0}, Forcing::none(ops.size())).states.back().g;
        return r;
      },
      serial);

  const BasisSet& fine = *runs.back().basis;
  const VelocityField uf = FieldSampler(fine).evaluate(runs.back().final_g);
  StudyReport rep;
  rep.kind = "spatial-convergence";
  rep.informational = informational;
  rep.params = {{"geometry", to_string(domain.geometry)}, {"final_time", config.final_time},
                {"dt", config.dt}, {"scheme", to_string(config.scheme)}, {"physics", params_json(config.params)},
                {"initial", initial.to_json()}};
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const VelocityField uc = evaluate_field(*runs[i].basis, runs[i].final_g, fine.grid);
    double e2 = 0.0;
    for (std::size_t q = 0; q < fine.grid.size(); ++q)
      e2 += fine.grid.weight(q) * (uc.row(static_cast<Eigen::Index>(q)) - uf.row(static_cast<Eigen::Index>(q))).squaredNorm();
    rep.refinement.push_back(ms[i]);
    rep.errors.push_back(std::sqrt(e2));
  }
  rep.extra["finest_modes"] = ms.back();
  rep.extra["coarsest_cross_check"] = runs.front().cross_check;
  if (runs.front().cross_check > 1e-9) rep.notes.push_back("coarsest run is under-resolved (convection cross-check)");

  const double scale = std::max(1.0, runs.back().final_g.norm());
  const bool roundoff = *std::max_element(rep.errors.begin(), rep.errors.end()) <= 1e-12 * scale;
  std::vector<double> ratios;
  bool ok = true;
  for (std::size_t i = 1; i < rep.errors.size(); ++i) {
    ratios.push_back(rep.errors[i - 1] / rep.errors[i]);
    ok &= rep.errors[i] < rep.errors[i - 1] && ratios.back() >= 2.0;
  }
  rep.extra["ratios"] = ratios;
  if (rep.errors.size() >= 2 && !roundoff) {
    std::vector<double> h(rep.refinement.begin(), rep.refinement.end());
    rep.order = -fit_order(h, rep.errors);
  }
  if (roundoff) {
    rep.notes.push_back("all errors at roundoff level: initial data lies in the coarsest span");
    ok = true;
  }
  rep.pass = informational ? true : ok;
  return rep;
}

StudyReport twin_run(const OperatorSet& ops, const SolverConfig& config, const Eigen::VectorXd& u0,
                     const std::vector<double>& eps, std::uint64_t seed, const Forcing& f, bool serial) {
  require_halving(eps, "twin_run");
  const int m = ops.size();
  const Forcing forcing = f.coefficients ? f : Forcing::none(m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd delta(m);
  for (int j = 0; j < m; ++j) delta(j) = normal(rng);
  delta.normalize();

  // base twice (bitwise check) then one run per eps
  auto trajs = run_all<Trajectory>(
      eps.size() + 2,
      [&](std::size_t i) {
        const Eigen::VectorXd g0 = i < 2 ? u0 : Eigen::VectorXd(u0 + eps[i - 2] * delta);
        return solve(ops, config, {0.0, g0}, forcing);
      },
      serial);

  StudyReport rep;
  rep.kind = "twin-run";
  rep.params = {{"final_time", config.final_time}, {"dt", config.dt}, {"scheme", to_string(config.scheme)},
                {"physics", params_json(config.params)}, {"seed", seed}, {"modes", m}};
  rep.refinement = eps;
  const GapSeries same = stability_gap(trajs[0], trajs[1], ops);
  rep.extra["identical_max_gap"] = *std::max_element(same.gap_sq.begin(), same.gap_sq.end());
  rep.extra["gronwall_exponent_T"] = same.exponent.back();
  for (std::size_t i = 0; i < eps.size(); ++i) rep.errors.push_back(stability_gap(trajs[i + 2], trajs[0], ops).gap_sq.back());

  std::vector<double> ratios;
  bool in_band = true;
  for (std::size_t i = 1; i < rep.errors.size(); ++i) {
    ratios.push_back(rep.errors[i - 1] / rep.errors[i]);
    in_band &= ratios.back() >= 3.6 && ratios.back() <= 4.4;
  }
  rep.extra["ratios"] = ratios;
  rep.order = fit_order(eps, rep.errors);
  const bool identical_ok = rep.extra["identical_max_gap"].get<double>() <= 1e-20;
  const double relative = eps.front() / std::max(u0.norm(), 1e-300);
  if (!in_band && relative > 0.05) {
    std::ostringstream os;
    os << "perturbation eps = " << eps.front() << " is " << relative
       << " of ||u0||: outside the linear-response regime, ratios reported without pass/fail";
    rep.notes.push_back(os.str());
    rep.informational = true;
    rep.pass = identical_ok;
  } else {
    rep.pass = in_band && identical_ok;
  }
  return rep;
}

}  // namespace navslip
