#include "navslip/timestepper.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace navslip;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::VectorXd random_state(int m, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd g(m);
  for (int i = 0; i < m; ++i) g(i) = scale * n(rng);
  return g;
}

SolverConfig config(double dt, double T, Scheme s, PhysicsParams p) {
  SolverConfig c;
  c.dt = dt;
  c.final_time = T;
  c.scheme = s;
  c.params = p;
  return c;
}

}  // namespace

TEST(InitialProjection, ZeroAndBasisMode) {
  const auto b = build_basis(DomainSpec::slab(kTwoPi, kTwoPi, 1.0, 1.0), 12);
  const OperatorSet ops(b);
  EXPECT_EQ(initial_projection(ops, VelocityField(VelocityField::Zero(ops.sampler().nodes(), 3))).g.norm(), 0.0);
  const auto s = initial_projection(ops, ops.sampler().evaluate(Eigen::VectorXd::Unit(12, 4)));
  EXPECT_EQ(s.t, 0.0);
  EXPECT_LT((s.g - Eigen::VectorXd::Unit(12, 4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(initial_projection(ops, Eigen::VectorXd(Eigen::VectorXd::Zero(5))), std::invalid_argument);
}

TEST(InitialProjection, TailEnergyIsLost) {
  // unit shell only; add 0.5 * normalized e_z cos(x + y), which lives on |k|^2 = 2
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 12);
  const OperatorSet ops(b);
  VelocityField u0 = ops.sampler().evaluate(Eigen::VectorXd::Unit(12, 0));
  const double norm = std::sqrt(2.0 / b.domain.volume());
  for (std::size_t q = 0; q < ops.sampler().nodes(); ++q) {
    const auto x = ops.sampler().grid().point(q);
    u0(static_cast<Eigen::Index>(q), 2) += 0.5 * norm * std::cos(x[0] + x[1]);
  }
  const double field_energy = ops.sampler().weights().dot(u0.rowwise().squaredNorm());
  EXPECT_NEAR(field_energy, 1.25, 1e-12);
  const auto s = initial_projection(ops, u0);
  EXPECT_NEAR(s.g.squaredNorm(), 1.0, 1e-12);
  EXPECT_NEAR(field_energy - s.g.squaredNorm(), 0.25, 1e-12);
}

TEST(Step, CrankNicolsonAmplificationOnStiffnessEigenmode) {
  const auto b = build_basis(DomainSpec::slab(kTwoPi, 3.0, 1.0, 1.0), 20);
  const OperatorSet ops(b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ops.stiffness());
  auto c = config(0.05, 1.0, Scheme::ImexCN, {0.3, 0.0, 1.0});
  c.convection = false;
  for (int k : {0, 7, 19}) {
    const double lambda = es.eigenvalues()(k);
    const Eigen::VectorXd v = es.eigenvectors().col(k);
    const auto next = step({0.0, v}, ops, c, Forcing::none(20));
    const double r = (1 - c.dt * 0.3 * lambda / 2) / (1 + c.dt * 0.3 * lambda / 2);
    EXPECT_LT((next.g - r * v).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_DOUBLE_EQ(next.t, 0.05);
  }
}

TEST(Step, ZeroIsAnEquilibrium) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36);
  const OperatorSet ops(b);
  for (Scheme s : {Scheme::ImexCN, Scheme::Rk4Explicit}) {
    const auto traj = solve(ops, config(0.01, 1.0, s, {0.1, 1.0, 3.0}), {0.0, Eigen::VectorXd::Zero(36)},
                            Forcing::none(36));
    ASSERT_EQ(traj.states.size(), 101u);
    for (const auto& st : traj.states) EXPECT_EQ(st.g.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(traj.states.back().t, 1.0);
  }
}

TEST(Step, ImexAndRk4AgreeAtSecondOrder) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36);
  const OperatorSet ops(b);
  const GalerkinState s0{0.0, random_state(36, 3, 0.5)};
  const PhysicsParams p{0.1, 1.0, 3.0};
  std::vector<double> diff;
  for (double dt : {0.01, 0.005, 0.0025}) {
    auto ci = config(dt, 0.1, Scheme::ImexCN, p);
    ci.picard_tol = 1e-14;
    const auto a = solve(ops, ci, s0, Forcing::none(36)).states.back().g;
    const auto r = solve(ops, config(dt, 0.1, Scheme::Rk4Explicit, p), s0, Forcing::none(36)).states.back().g;
    diff.push_back((a - r).norm());
  }
  EXPECT_GE(diff[0] / diff[1], 3.5);
  EXPECT_GE(diff[1] / diff[2], 3.5);
}

TEST(Solve, EnergyDecaysMonotonicallyWithoutForcing) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 52);
  const OperatorSet ops(b);
  const auto traj = solve(ops, config(0.01, 1.0, Scheme::ImexCN, {0.1, 1.0, 3.0}),
                          {0.0, random_state(52, 8)}, Forcing::none(52));
  for (std::size_t n = 1; n < traj.states.size(); ++n)
    EXPECT_LE(traj.states[n].g.squaredNorm(), traj.states[n - 1].g.squaredNorm() * (1 + 1e-12));
}

TEST(Solve, RecordsEveryNthStepAndFinalState) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 12);
  const OperatorSet ops(b);
  auto c = config(0.01, 0.25, Scheme::ImexCN, {0.1, 0.0, 1.0});
  c.record_every = 10;
  const auto traj = solve(ops, c, {0.0, random_state(12, 1)}, Forcing::none(12));
  ASSERT_EQ(traj.states.size(), 4u);
  EXPECT_DOUBLE_EQ(traj.states[1].t, 0.1);
  EXPECT_DOUBLE_EQ(traj.states.back().t, 0.25);
  EXPECT_EQ(traj.steps, 25);
  EXPECT_EQ(traj.basis_hash, basis_hash(b));
}

TEST(Solve, BitwiseDeterministic) {
  const auto b = build_basis(DomainSpec::slab(kTwoPi, kTwoPi, 1.0, 1.0), 24);
  const OperatorSet ops(b);
  const auto c = config(0.01, 0.2, Scheme::ImexCN, {0.1, 1.0, 3.0});
  const GalerkinState s0{0.0, random_state(24, 5)};
  const auto t1 = solve(ops, c, s0, Forcing::none(24));
  const auto t2 = solve(OperatorSet(b), c, s0, Forcing::none(24));
  ASSERT_EQ(t1.states.size(), t2.states.size());
  for (std::size_t n = 0; n < t1.states.size(); ++n) EXPECT_TRUE(t1.states[n].g == t2.states[n].g);
}

TEST(Solve, PicardFailureReportsTime) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36);
  const OperatorSet ops(b);
  auto c = config(0.5, 1.0, Scheme::ImexCN, {0.01, 1.0, 3.0});
  c.picard_max_iter = 3;
  c.picard_tol = 1e-14;
  try {
    solve(ops, c, {0.0, random_state(36, 2, 20.0)}, Forcing::none(36));
    FAIL() << "expected PicardNotConverged";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::PicardNotConverged);
    EXPECT_GE(e.time(), 0.0);
  }
}

TEST(Solve, ExplicitInstabilityIsDetected) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 52);
  const OperatorSet ops(b);
  // far outside the RK4 stability region
  const auto c = config(0.5, 50.0, Scheme::Rk4Explicit, {1.0, 0.0, 1.0});
  try {
    solve(ops, c, {0.0, random_state(52, 2)}, Forcing::none(52));
    FAIL() << "expected NonFiniteState";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::NonFiniteState);
    EXPECT_GT(e.time(), 0.0);
  }
}

TEST(SolverConfig, Validation) {
  EXPECT_THROW(config(0.3, 1.0, Scheme::ImexCN, {}).validate(), std::invalid_argument);
  EXPECT_THROW(config(2.0, 1.0, Scheme::ImexCN, {}).validate(), std::invalid_argument);
  EXPECT_THROW(config(0.1, 1.0, Scheme::ImexCN, {1.0, 0.0, 0.5}).validate(), std::invalid_argument);
  EXPECT_NO_THROW(config(0.1, 1.0, Scheme::ImexCN, {}).validate());
  EXPECT_EQ(scheme_from_string("rk4"), Scheme::Rk4Explicit);
  EXPECT_THROW(scheme_from_string("euler"), std::invalid_argument);
}

TEST(DefaultDt, ExplicitWithinStabilityAndImexConverges) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36);
  const OperatorSet ops(b);
  const GalerkinState s0{0.0, random_state(36, 4)};
  auto c = config(1.0, 2.0, Scheme::Rk4Explicit, {1.0, 1.0, 3.0});
  const double dt = default_dt(ops, c, s0, Forcing::none(36));
  EXPECT_LE(dt * 1.0 * 4.0, 0.25 * 2.785 + 1e-12);  // largest A eigenvalue is 2|k|^2 = 4
  c.dt = dt;
  EXPECT_NO_THROW(c.validate());
  c.scheme = Scheme::ImexCN;
  c.dt = default_dt(ops, c, s0, Forcing::none(36));
  EXPECT_NO_THROW(c.validate());
  StepInfo info;
  Stepper(ops, c, Forcing::none(36)).step(s0, &info);
  EXPECT_LE(info.picard_iterations, 10);
}

TEST(Export, TrajectoryCsv) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 3);
  const OperatorSet ops(b);
  const auto traj = solve(ops, config(0.5, 1.0, Scheme::ImexCN, {}), {0.0, Eigen::Vector3d(1.0, 0.1, 1.0 / 3.0)},
                          Forcing::none(3));
  const auto path = std::filesystem::temp_directory_path() / "navslip_traj_test.csv";
  write_trajectory_csv(traj, path);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "t,g1,g2,g3");
  EXPECT_EQ(first, "0,1,0.10000000000000001,0.33333333333333331");
  std::filesystem::remove(path);
}
