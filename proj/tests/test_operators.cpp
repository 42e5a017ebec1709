#include "navslip/operators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace navslip;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::VectorXd random_coeffs(int m, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd g(m);
  for (int i = 0; i < m; ++i) g(i) = n(rng);
  return g;
}

double h1_norm(const BasisSet& b, const Eigen::VectorXd& g) { return std::sqrt(inner_h1(b, g, g)); }

}  // namespace

TEST(Stiffness, TorusUnitShellIsTwiceIdentity) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 12);
  const Eigen::MatrixXd A = assemble_stiffness(b);
  EXPECT_LT((A - 2.0 * Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stiffness, SymmetricAndBoundaryPartIsPositiveSemidefinite) {
  auto b0 = build_basis(DomainSpec::slab(kTwoPi, kTwoPi, 1.0, 0.0), 40);
  BasisSet b1 = b0;
  b1.domain.friction = 1.0;
  refresh_grams(b1);
  const Eigen::MatrixXd A0 = assemble_stiffness(b0), A1 = assemble_stiffness(b1);
  for (const auto* A : {&A0, &A1})
    EXPECT_LE((*A - A->transpose()).cwiseAbs().maxCoeff(), 1e-12 * A->cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A1 - A0);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * A1.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pd(A1);
  EXPECT_GT(pd.eigenvalues().minCoeff(), 0.0);

  for (std::uint32_t s = 0; s < 5; ++s) {
    const Eigen::VectorXd x = random_coeffs(b1.size(), s);
    EXPECT_GE(x.dot(A1 * x), 2.0 * inner_h1(b1, x, x) - 1e-12 * x.squaredNorm());
  }
}

TEST(Trilinear, SkewSymmetryOnTorusAndSlab) {
  for (const auto& d : {DomainSpec::torus(kTwoPi, 3.0, 5.0), DomainSpec::slab(kTwoPi, 4.0, 1.0, 0.7),
                        DomainSpec::slab(5.0, 5.0, 0.5, 0.0)}) {
    const auto b = build_basis(d, 30);
    const OperatorSet ops(b);
    for (std::uint32_t s = 0; s < 4; ++s) {
      const Eigen::VectorXd u = random_coeffs(b.size(), 2 * s), v = random_coeffs(b.size(), 2 * s + 1);
      const double scale = u.norm() * std::pow(h1_norm(b, v), 2);
      EXPECT_LE(std::abs(trilinear_form(ops, u, v, v)), 1e-10 * scale) << to_string(d.geometry);
      EXPECT_LE(std::abs(convection_rhs(ops, v).dot(v)), 1e-10 * v.norm() * std::pow(h1_norm(b, v), 2));
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(b.size());
    EXPECT_EQ(trilinear_form(ops, zero, random_coeffs(b.size(), 9), random_coeffs(b.size(), 10)), 0.0);
    EXPECT_EQ(convection_rhs(ops, zero).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Trilinear, TorusMatchesFourTimesOversampledOracle) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36);
  const OperatorSet ops(b);
  for (std::uint32_t s = 0; s < 3; ++s) {
    const Eigen::VectorXd a = random_coeffs(b.size(), 3 * s), v = random_coeffs(b.size(), 3 * s + 1),
                          c = random_coeffs(b.size(), 3 * s + 2);
    double expected = 0.0;
    oracle::torus_grid(b, 4, [&](const Eigen::Vector3d& x, double w) {
      const auto pa = oracle::torus_eval(b, a, x), pv = oracle::torus_eval(b, v, x), pc = oracle::torus_eval(b, c, x);
      expected += w * (pv.grad * pa.u).dot(pc.u);
    });
    EXPECT_NEAR(trilinear_form(ops, a, v, c), expected, 1e-10 * std::max(1.0, std::abs(expected)));
  }
  const Eigen::VectorXd a = random_coeffs(b.size(), 77);
  const Eigen::VectorXd direct = ops.convection(a);
  for (int j = 0; j < 4; ++j)
    EXPECT_NEAR(direct(j), trilinear_form(ops, a, a, Eigen::VectorXd::Unit(b.size(), j)), 1e-10);
}

TEST(Trilinear, RejectsDimensionMismatch) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 12);
  const OperatorSet ops(b);
  EXPECT_THROW(trilinear_form(ops, Eigen::VectorXd::Zero(11), Eigen::VectorXd::Zero(12), Eigen::VectorXd::Zero(12)),
               std::invalid_argument);
  EXPECT_THROW(convection_rhs(ops, Eigen::VectorXd::Zero(13)), std::invalid_argument);
}

TEST(Convection, TensorAndTransformPathsAgree) {
  for (const auto& d : {DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), DomainSpec::slab(kTwoPi, 3.0, 1.0, 1.0)}) {
    const auto b = build_basis(d, 16);
    const OperatorSet ops(b);
    EXPECT_TRUE(ops.dealiased());
    EXPECT_TRUE(ops.warnings().empty());
    EXPECT_EQ(cross_check_convection(ops, Eigen::VectorXd::Zero(16)), 0.0);
    EXPECT_LE(cross_check_convection(ops, Eigen::VectorXd::Unit(16, 0)), 1e-9);
    for (std::uint32_t s = 0; s < 3; ++s) EXPECT_LE(cross_check_convection(ops, random_coeffs(16, s)), 1e-9);
  }
}

TEST(Convection, TensorEntriesAreTrilinearValues) {
  const auto b = build_basis(DomainSpec::slab(kTwoPi, kTwoPi, 1.0, 0.5), 10);
  const OperatorSet ops(b);
  const auto& T = ops.convection_tensor();
  for (int i = 0; i < 10; i += 3)
    for (int l = 0; l < 10; l += 2)
      for (int j = 0; j < 10; ++j) {
        const auto e = [&](int k) { return Eigen::VectorXd::Unit(10, k); };
        EXPECT_NEAR(T[i](l, j), trilinear_form(ops, e(i), e(l), e(j)), 1e-11);
        // antisymmetric in the last two slots
        EXPECT_NEAR(T[i](l, j), -T[i](j, l), 1e-11);
      }
}

TEST(Convection, AliasedGridIsFlagged) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36, GridRequest{1.0, {0, 0, 0}});
  const OperatorSet ops(b);
  EXPECT_FALSE(ops.dealiased());
  ASSERT_FALSE(ops.warnings().empty());
  // energy concentrated on the truncation shell
  Eigen::VectorXd u = Eigen::VectorXd::Zero(36);
  u.tail(24) = random_coeffs(24, 5);
  EXPECT_GT(cross_check_convection(ops, u), 1e-9);
}

TEST(Convection, TensorUnavailableForLargeBasis) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), kMaxTensorModes + 1, GridRequest{1.0, {0, 0, 0}});
  const OperatorSet ops(b);
  EXPECT_THROW(cross_check_convection(ops, Eigen::VectorXd::Zero(b.size())), std::invalid_argument);
}

TEST(Damping, ZeroCoefficientAndLinearCase) {
  for (const auto& d : {DomainSpec::torus(kTwoPi, 2.0, 3.0), DomainSpec::slab(kTwoPi, 3.0, 1.0, 2.0)}) {
    const auto b = build_basis(d, 24);
    const OperatorSet ops(b);
    const Eigen::VectorXd u = random_coeffs(24, 4);
    EXPECT_EQ(damping_rhs(ops, u, {0.1, 0.0, 3.0}).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::VectorXd lin = damping_rhs(ops, u, {0.1, 0.7, 1.0});
    EXPECT_LT((lin - 0.7 * u).cwiseAbs().maxCoeff(), 1e-12 * u.cwiseAbs().maxCoeff() * 10);
  }
}

TEST(Damping, CubicSingleModeMatchesOversampledOracle) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 36);
  const OperatorSet ops(b);
  const double theta = 1.3;
  for (int mode : {0, 5, 20, 35}) {
    const Eigen::VectorXd u = 0.8 * Eigen::VectorXd::Unit(b.size(), mode);
    const Eigen::VectorXd got = damping_rhs(ops, u, {0.1, theta, 3.0});
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(b.size());
    oracle::torus_grid(b, 4, [&](const Eigen::Vector3d& x, double w) {
      const Eigen::Vector3d v = oracle::torus_eval(b, u, x).u;
      const Eigen::Vector3d s = theta * v.squaredNorm() * v;
      for (int j = 0; j < b.size(); ++j)
        expected(j) += w * s.dot(oracle::torus_eval(b, Eigen::VectorXd::Unit(b.size(), j), x).u);
    });
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-9) << "mode " << mode;
  }
}

TEST(Damping, HomogeneousOfDegreeBeta) {
  const auto b = build_basis(DomainSpec::slab(kTwoPi, kTwoPi, 1.0, 1.0), 20);
  const OperatorSet ops(b);
  for (double beta : {1.0, 1.5, 2.5, 3.0}) {
    const Eigen::VectorXd u = random_coeffs(20, 11);
    const PhysicsParams p{1.0, 0.9, beta};
    for (double lambda : {0.3, 1.7}) {
      const Eigen::VectorXd lhs = damping_rhs(ops, lambda * u, p);
      const Eigen::VectorXd rhs = std::pow(lambda, beta) * damping_rhs(ops, u, p);
      EXPECT_LE((lhs - rhs).norm(), 1e-10 * rhs.norm());
    }
  }
}

TEST(Damping, MonotoneOnPairs) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, 4.0, 3.0), 24);
  const OperatorSet ops(b);
  for (double beta : {1.0, 1.2, 2.0, 3.0, 4.5}) {
    const PhysicsParams p{1.0, 1.0, beta};
    for (std::uint32_t s = 0; s < 6; ++s) {
      const Eigen::VectorXd u1 = random_coeffs(24, 100 + s), u2 = (s % 2 ? 0.5 : 1.0) * random_coeffs(24, 200 + s);
      const double gap = (damping_rhs(ops, u1, p) - damping_rhs(ops, u2, p)).dot(u1 - u2);
      EXPECT_GE(gap, -1e-12 * (u1.norm() + u2.norm()) * (u1 - u2).norm());
    }
  }
}

TEST(Damping, ZeroVelocityNodesAreFinite) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 12);
  const OperatorSet ops(b);
  const Eigen::VectorXd r = damping_rhs(ops, Eigen::VectorXd::Zero(12), {1.0, 1.0, 1.5});
  EXPECT_TRUE(r.allFinite());
  EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forcing, ZeroAndInSpanField) {
  const auto b = build_basis(DomainSpec::slab(kTwoPi, kTwoPi, 1.0, 1.0), 12);
  const OperatorSet ops(b);
  EXPECT_EQ(forcing_rhs(b, Forcing::none(12), 0.3).cwiseAbs().maxCoeff(), 0.0);
  const VelocityField w2 = ops.sampler().evaluate(Eigen::VectorXd::Unit(12, 1));
  const Forcing f = Forcing::from_field(ops.shared_sampler(), [w2](double) { return w2; });
  EXPECT_LT((forcing_rhs(b, f, 0.0) - Eigen::VectorXd::Unit(12, 1)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(f.l2_norm_squared(0.0), 1.0, 1e-10);
  EXPECT_THROW(forcing_rhs(b, Forcing::none(11), 0.0), std::invalid_argument);
}

TEST(PhysicsParams, RejectsOutOfRange) {
  EXPECT_NO_THROW((PhysicsParams{0.1, 0.0, 1.0}.validate()));
  EXPECT_THROW((PhysicsParams{0.0, 1.0, 3.0}.validate()), std::invalid_argument);
  EXPECT_THROW((PhysicsParams{0.1, -1.0, 3.0}.validate()), std::invalid_argument);
  try {
    PhysicsParams{0.1, 1.0, 0.5}.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("β ≥ 1 required"), std::string::npos);
  }
}

TEST(Export, BinaryLayoutHeaderAndValues) {
  const auto b = build_basis(DomainSpec::torus(kTwoPi, kTwoPi, kTwoPi), 6);
  const OperatorSet ops(b);
  const auto dir = std::filesystem::temp_directory_path() / "navslip_export_test";
  std::filesystem::create_directories(dir);
  write_stiffness_binary(ops, dir / "A.bin");
  write_tensor_binary(ops, dir / "T.bin");

  std::ifstream in(dir / "T.bin", std::ios::binary);
  char magic[8];
  std::uint32_t version = 0, rank = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&rank), 4);
  EXPECT_EQ(std::string(magic), "NAVSLIP");
  EXPECT_EQ(version, 1u);
  ASSERT_EQ(rank, 3u);
  std::uint64_t ext[3];
  in.read(reinterpret_cast<char*>(ext), sizeof ext);
  EXPECT_EQ(ext[0], 6u);
  std::vector<double> vals(216);
  in.read(reinterpret_cast<char*>(vals.data()), 216 * 8);
  ASSERT_TRUE(in);
  const auto& T = ops.convection_tensor();
  EXPECT_EQ(vals[1 * 36 + 2 * 6 + 3], T[1](2, 3));
  EXPECT_EQ(std::filesystem::file_size(dir / "A.bin"), 8u + 8u + 16u + 36u * 8u);
  std::filesystem::remove_all(dir);
}
