#include <gtest/gtest.h>

#include <cmath>

#include "generators.h"
#include "hycon/errors.h"
#include "hycon/mechanics.h"
#include "hycon/simulator.h"

namespace hycon {
namespace {

Mat row(double a, double b) {
  Mat m(1, 2);
  m << a, b;
  return m;
}

TEST(ImpulseMap, UnitMassSingleConstraint) {
  const Mat D = constraint_impulse_map(Mat::Identity(2, 2), row(1, 0));
  Mat expect = Mat::Zero(2, 2);
  expect(1, 1) = 1.0;
  EXPECT_LE((D - expect).norm(), 1e-15);
}

TEST(ImpulseMap, EmptyActiveSetIsIdentity) {
  MechanicalNetworkParams p{Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2),
                            row(1, 0), [](double) { return Vec(Vec::Zero(2)); }};
  EXPECT_EQ(constraint_impulse_map(p, {}), Mat(Mat::Identity(2, 2)));
}

TEST(ImpulseMap, RankDeficiencyThrows) {
  Mat Da(2, 2);
  Da << 1, 1, 2, 2;
  EXPECT_THROW(constraint_impulse_map(Mat::Identity(2, 2), Da), RankDeficiencyError);
}

TEST(ImpulseMap, ProjectionIdentities) {
  testing::Gen g(31);
  for (int k = 0; k < 200; ++k) {
    const int d = g.integer(2, 6);
    const int n = g.integer(1, d);
    const Mat M = g.spd(d);
    const Mat Da = g.mat(n, d);
    const Mat P = constraint_impulse_map(M, Da);
    // Rounding grows with the condition number of Da M^-1 Da^T.
    const Mat G = Da * M.inverse() * Da.transpose();
    const Vec sv = Eigen::JacobiSVD<Mat>(G).singularValues();
    const double tol = std::max(1e-12, 20 * 2.2e-16 * sv(0) / sv(sv.size() - 1));
    const double scale = 1 + Da.lpNorm<Eigen::Infinity>() * P.lpNorm<Eigen::Infinity>();
    EXPECT_LE((P * P - P).lpNorm<Eigen::Infinity>(), tol * scale);
    EXPECT_LE((Da * P).lpNorm<Eigen::Infinity>(), tol * scale);
  }
}

TEST(Multipliers, UnitMassSingleConstraint) {
  Vec f(2);
  f << 0.7, -1.3;
  const Vec lambda = constraint_multipliers(Mat::Identity(2, 2), row(1, 0), f);
  ASSERT_EQ(lambda.size(), 1);
  EXPECT_DOUBLE_EQ(lambda(0), -0.7);
  MechanicalNetworkParams p{Mat::Identity(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2), row(1, 0),
                            [f](double) { return f; }};
  const Vec force = constraint_force(p, {0}, 0.0, Vec::Zero(2), Vec::Zero(2));
  EXPECT_DOUBLE_EQ(force(0), -0.7);
  EXPECT_DOUBLE_EQ(force(1), 0.0);
}

TEST(Multipliers, OrthogonalForceNeedsNoReaction) {
  Vec f(2);
  f << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(constraint_multipliers(Mat::Identity(2, 2), row(1, 0), f)(0), 0.0);
}

TEST(Multipliers, ConstrainedAccelerationVanishes) {
  testing::Gen g(32);
  for (int k = 0; k < 200; ++k) {
    const int d = g.integer(2, 6);
    const int n = g.integer(1, d);
    const Mat M = g.spd(d);
    const Mat Da = g.mat(n, d);
    const Vec f = g.vec(d, -3, 3);
    const Vec lambda = constraint_multipliers(M, Da, f);
    const Vec acc = M.ldlt().solve(f + Da.transpose() * lambda);
    EXPECT_LE((Da * acc).lpNorm<Eigen::Infinity>(), 1e-12 * (1 + f.lpNorm<Eigen::Infinity>()) * (1 + Da.norm() * M.inverse().norm()));
  }
}

TEST(Network, ChecksParameters) {
  MechanicalNetworkParams p{Mat::Identity(2, 2), -Mat::Identity(2, 2), Mat::Identity(2, 2),
                            row(1, 0), [](double) { return Vec(Vec::Zero(2)); }};
  EXPECT_THROW(check_network(p), ConfigError);
  p.K = Mat::Identity(2, 2);
  p.Da = Mat::Zero(1, 3);
  EXPECT_THROW(check_network(p), ConfigError);
}

TEST(Network, ModesPerActiveSet) {
  Mat Da(2, 3);
  Da << 1, 0, 0, 0, 0, 1;
  MechanicalNetworkParams p{Mat::Identity(3, 3), 2 * Mat::Identity(3, 3), Mat::Identity(3, 3), Da,
                            [](double) { return Vec(Vec::Constant(3, -1.0)); }};
  const HybridSystemSpec sys = make_mech_network(p);
  EXPECT_EQ(sys.modes.size(), 4u);
  EXPECT_NE(sys.find_mode(active_set_name({})), nullptr);
  EXPECT_NE(sys.find_mode(active_set_name({0, 1})), nullptr);
  EXPECT_EQ(active_set_name({0, 2}), "c1_3");
  EXPECT_TRUE(validate(sys).empty());
}

TEST(Network, GravityDropSettlesOnConstraints) {
  Mat Da(1, 2);
  Da << 1, 0;
  MechanicalNetworkParams p{Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2), Da,
                            [](double) { return Vec(Vec::Constant(2, -2.0)); }};
  const HybridSystemSpec sys = make_mech_network(p);
  Vec x(4);
  x << 1.0, 0.5, 0.0, 0.0;
  const auto traj = simulate(sys, {"free", x, 0.0}, 10.0);
  ASSERT_EQ(traj.status, TrajectoryStatus::kCompleted) << traj.message;
  ASSERT_FALSE(traj.events.empty());
  EXPECT_EQ(traj.final_state.mode.name, active_set_name({0}));
  // Constraint holds and its velocity is zero in the constrained mode.
  EXPECT_NEAR(traj.final_state.x(0), 0.0, 1e-9);
  EXPECT_NEAR(traj.final_state.x(2), 0.0, 1e-9);
}

}  // namespace
}  // namespace hycon
