#include "navslip/run.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

namespace navslip {

namespace {

using nlohmann::json;

Forcing make_forcing(const RunDescription& d, const OperatorSet& ops) {
  switch (d.forcing.kind) {
    case ForcingSpec::Kind::None: return Forcing::none(ops.size());
    case ForcingSpec::Kind::StaticMode: {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(ops.size());
      c(d.forcing.mode) = d.forcing.amplitude;
      return Forcing::constant(c);
    }
    case ForcingSpec::Kind::Mms:
      return make_mms_forcing(MmsCase::by_id(d.forcing.mms_case, d.solver.params), ops);
  }
  return Forcing::none(ops.size());
}

SolverConfig resolved_solver(const RunDescription& d, const OperatorSet& ops, const GalerkinState& u0,
                             const Forcing& f) {
  SolverConfig c = d.solver;
  if (d.auto_dt) c.dt = default_dt(ops, c, u0, f);
  c.validate();
  return c;
}

struct Context {
  const RunDescription& desc;
  const RunOptions& opts;
  std::filesystem::path dir;
  std::ostream& log;
  json manifest = json::object();
  std::vector<std::string> artifacts;

  void csv_trajectory(const Trajectory& t) {
    if (!desc.write_csv) return;
    write_trajectory_csv(t, dir / "trajectory.csv");
    artifacts.push_back("trajectory.csv");
  }
  void csv_ledger(const EnergyLedger& l) {
    if (!desc.write_csv) return;
    write_ledger_csv(l, dir / "ledger.csv");
    artifacts.push_back("ledger.csv");
  }
};

json simulate(Context& cx, bool estimate) {
  const OperatorSet ops(build_basis(cx.desc.domain, cx.desc.modes, cx.desc.grid));
  const Forcing f = make_forcing(cx.desc, ops);
  const GalerkinState u0 = initial_projection(ops, initial_coefficients(cx.desc.initial, ops));
  const SolverConfig cfg = resolved_solver(cx.desc, ops, u0, f);
  cx.manifest["basis_hash"] = basis_hash(ops.basis());
  cx.manifest["dt"] = cfg.dt;
  cx.log << "integrating " << cfg.final_time / cfg.dt << " steps of dt=" << cfg.dt << " on m=" << ops.size() << "\n";

  const Trajectory traj = solve(ops, cfg, u0, f);
  const EnergyLedger ledger = energy_ledger(traj, ops, cfg.params, f);
  cx.csv_trajectory(traj);
  cx.csv_ledger(ledger);

  const LedgerRow& last = ledger.rows.back();
  json summary = {{"steps", traj.steps},
                  {"dt", cfg.dt},
                  {"max_picard_iterations", traj.max_picard_iterations},
                  {"final_time", last.t},
                  {"final_l2_sq", last.e_l2},
                  {"l2_crosscheck", ledger.l2_crosscheck}};
  if (!estimate) {
    summary["kind"] = "simulate";
    summary["pass"] = true;
    return summary;
  }
  const EstimateReport est = check_energy_inequality(ledger, ops.basis(), u0.g.squaredNorm());
  json rep = est.to_json();
  rep["kind"] = "energy-report";
  rep["run"] = summary;
  if (cfg.record_every == 1) {
    const auto res = energy_identity_residuals(ledger, cfg.dt);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    rep["energy_identity"] = {{"max_step_residual", worst}, {"residual_over_dt3", worst / std::pow(cfg.dt, 3)}};
  }
  return rep;
}

json verify(Context& cx) {
  const BasisSet basis = build_basis(cx.desc.domain, cx.desc.modes, cx.desc.grid);
  cx.manifest["basis_hash"] = basis_hash(basis);
  const StudySpec& s = cx.desc.study;
  const double loosest = std::max({s.divergence_tol, s.normal_trace_tol, s.slip_tol, s.gram_tol});
  const CertificationReport c = verify_basis(basis, loosest);
  const json checks = {
      {"divergence", {{"value", c.max_divergence}, {"tolerance", s.divergence_tol}, {"worst_mode", c.worst_divergence_mode}, {"pass", c.max_divergence <= s.divergence_tol}}},
      {"normal_trace", {{"value", c.max_normal_trace}, {"tolerance", s.normal_trace_tol}, {"worst_mode", c.worst_normal_trace_mode}, {"pass", c.max_normal_trace <= s.normal_trace_tol}}},
      {"slip", {{"value", c.max_slip}, {"tolerance", s.slip_tol}, {"worst_mode", c.worst_slip_mode}, {"pass", c.max_slip <= s.slip_tol}}},
      {"gram", {{"value", c.max_gram_deviation}, {"tolerance", s.gram_tol}, {"worst_mode", c.worst_gram_mode}, {"pass", c.max_gram_deviation <= s.gram_tol}}},
  };
  bool pass = true;
  for (const auto& [name, v] : checks.items()) pass = pass && v["pass"].get<bool>();
  return {{"kind", "verify-basis"},
          {"modes", basis.size()},
          {"geometry", to_string(basis.domain.geometry)},
          {"checks", checks},
          {"failing_modes", c.failing_modes},
          {"pass", pass}};
}

json mms(Context& cx) {
  const OperatorSet ops(build_basis(cx.desc.domain, cx.desc.modes, cx.desc.grid));
  const MmsCase c = MmsCase::by_id(cx.desc.forcing.mms_case, cx.desc.solver.params);
  const Forcing f = make_mms_forcing(c, ops);
  const int m = ops.size();
  const GalerkinState u0{0.0, c.exact(0.0, m)};
  const SolverConfig cfg = resolved_solver(cx.desc, ops, u0, f);
  cx.manifest["basis_hash"] = basis_hash(ops.basis());
  cx.manifest["dt"] = cfg.dt;

  double max_err = 0.0;
  const Trajectory traj = solve(ops, cfg, u0, f, [&](const GalerkinState& s, const StepInfo&) {
    max_err = std::max(max_err, (s.g - c.exact(s.t, m)).norm());
  });
  cx.csv_trajectory(traj);
  cx.csv_ledger(energy_ledger(traj, ops, cfg.params, f));

  const double residual = (galerkin_rhs(ops, cfg, f, 0.0, u0.g) - c.exact_rate(0.0, m)).cwiseAbs().maxCoeff();
  return {{"kind", "mms"},
          {"case", c.id},
          {"dt", cfg.dt},
          {"scheme", to_string(cfg.scheme)},
          {"mms_residual_t0", residual},
          {"max_error", max_err},
          {"note", "initial data is the manufactured solution at t = 0"},
          {"pass", residual <= 1e-10}};
}

json converge_time(Context& cx) {
  const OperatorSet ops(build_basis(cx.desc.domain, cx.desc.modes, cx.desc.grid));
  cx.manifest["basis_hash"] = basis_hash(ops.basis());
  const MmsCase c = MmsCase::by_id(cx.desc.forcing.mms_case, cx.desc.solver.params);
  StudyReport rep = temporal_convergence_study(c, ops, cx.desc.solver.scheme, cx.desc.study.dts,
                                               cx.desc.solver.final_time, cx.desc.solver.picard_tol,
                                               cx.opts.serial);
  return rep.to_json();
}

json converge_space(Context& cx) {
  const std::vector<int>& ms = cx.desc.study.modes;
  if (ms.size() < 2) throw std::invalid_argument("study.modes: at least two resolutions required");
  const OperatorSet finest(build_basis(cx.desc.domain, ms.back(), cx.desc.grid));
  const Forcing f = Forcing::none(finest.size());
  if (cx.desc.forcing.kind != ForcingSpec::Kind::None)
    throw std::invalid_argument("converge-space supports unforced runs only (forcing.kind = none)");
  const GalerkinState u0 = initial_projection(finest, initial_coefficients(cx.desc.initial, finest));
  const SolverConfig cfg = resolved_solver(cx.desc, finest, u0, f);
  cx.manifest["basis_hash"] = basis_hash(finest.basis());
  cx.manifest["dt"] = cfg.dt;
  StudyReport rep = spatial_convergence_study(cx.desc.domain, ms, cfg, cx.desc.initial, cx.desc.grid, false,
                                              cx.opts.serial);
  return rep.to_json();
}

json twin(Context& cx) {
  const OperatorSet ops(build_basis(cx.desc.domain, cx.desc.modes, cx.desc.grid));
  const Forcing f = make_forcing(cx.desc, ops);
  const GalerkinState u0 = initial_projection(ops, initial_coefficients(cx.desc.initial, ops));
  const SolverConfig cfg = resolved_solver(cx.desc, ops, u0, f);
  cx.manifest["basis_hash"] = basis_hash(ops.basis());
  cx.manifest["dt"] = cfg.dt;
  StudyReport rep = twin_run(ops, cfg, u0.g, cx.desc.study.eps, cx.desc.study.perturbation_seed, f, cx.opts.serial);
  return rep.to_json();
}

}  // namespace

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RunResult run_command(const std::string& subcommand, const RunDescription& desc, const RunOptions& opts,
                      std::ostream& log) {
  RunResult result;
  RunDescription echo = desc;
  if (opts.output_directory) echo.output_directory = *opts.output_directory;
  result.directory = echo.output_directory;
  Context cx{echo, opts, result.directory, log, json::object(), {}};

  auto fail = [&](int status, json error) {
    result.status = status;
    try {
      std::filesystem::create_directories(result.directory);
      write_json(error, result.directory / "error.json");
    } catch (const std::exception&) {
      // the error still reaches the caller through the result
    }
    result.report = std::move(error);
    return result;
  };

  if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
    return fail(kExitConfigError, {{"error", {{"kind", "usage"}, {"message", "unknown subcommand '" + subcommand + "'"}}}});

  const auto start = std::chrono::steady_clock::now();
  json report;
  try {
    std::filesystem::create_directories(result.directory);
    std::filesystem::remove(result.directory / "error.json");
    if (subcommand == "simulate") report = simulate(cx, false);
    else if (subcommand == "energy-report") report = simulate(cx, true);
    else if (subcommand == "verify-basis") report = verify(cx);
    else if (subcommand == "mms") report = mms(cx);
    else if (subcommand == "converge-time") report = converge_time(cx);
    else if (subcommand == "converge-space") report = converge_space(cx);
    else report = twin(cx);
  } catch (const SolverError& e) {
    return fail(kExitRuntimeError,
                {{"error", {{"kind", e.kind() == SolverError::Kind::PicardNotConverged ? "picard-not-converged" : "non-finite-state"},
                            {"message", e.what()},
                            {"time", e.time()}}}});
  } catch (const std::exception& e) {
    return fail(kExitRuntimeError, {{"error", {{"kind", "runtime"}, {"message", e.what()}}}});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json seeds = json::object();
  if (echo.initial.kind == InitialSpec::Kind::Random) seeds["initial"] = echo.initial.seed;
  if (subcommand == "twin") seeds["perturbation"] = echo.study.perturbation_seed;

  json& man = cx.manifest;
  man["version"] = kVersion;
  man["subcommand"] = subcommand;
  man["config"] = echo.to_json();
  man["seeds"] = seeds;
  man["serial"] = opts.serial;
  if (echo.write_json) cx.artifacts.push_back("report.json");
  cx.artifacts.push_back("config.json");
  man["artifacts"] = cx.artifacts;
  // study reports carry the reproducible part of the manifest
  if (report.contains("manifest")) report["manifest"] = man;
  man["wall_time_s"] = wall;

  try {
    if (echo.write_json) write_json(report, result.directory / "report.json");
    write_json(echo.to_json(), result.directory / "config.json");
    write_json(man, result.directory / "manifest.json");
  } catch (const std::exception& e) {
    return fail(kExitRuntimeError, {{"error", {{"kind", "io"}, {"message", e.what()}}}});
  }

  result.report = report;
  result.manifest = man;
  const bool pass = report.value("pass", false);
  log << subcommand << ": " << (pass ? "pass" : "FAIL") << " (" << result.directory.string() << ")\n";
  if (!pass) {
    fail(kExitCheckFailed, {{"error", {{"kind", "check-failed"}, {"message", subcommand + " checks did not pass"}, {"report", "report.json"}}}});
    result.report = report;
  }
  return result;
}

}  // namespace navslip
