#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hycon/contraction.h"
#include "hycon/errors.h"
#include "hycon/system_definition.h"
#include "hycon/systems_library.h"
#include "hycon/variational.h"

namespace hycon {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(Saltation, IdenticalFieldsGiveIdentity) {
  const HybridSystemSpec sys = make_example1({1.5, 0.7, 1.5, 0.7});
  const SaltationRecord r = saltation(sys, {"R", "L"}, 0.0, v2(1.0, 0.8));
  EXPECT_LE((r.xi - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_NEAR(r.induced_norm, 1.0, 1e-14);
}

TEST(Saltation, PlanarPwlClosedForm) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int k = 0; k < 50; ++k) {
    PlanarPwlParams p{u(rng) - 1.0, u(rng) - 1.0, u(rng), u(rng), u(rng), u(rng)};
    const HybridSystemSpec sys = make_planar_pwl(p);
    const double x2 = u(rng);
    // Leaving "plus" through x1 = 0 with x2 > 0.
    const Mat xi_p = saltation(sys, {"plus", "minus"}, 0.0, v2(0.0, x2)).xi;
    const Mat expect_p = m2(p.beta_minus * p.c_plus / p.beta_plus, 0.0,
                            p.c_plus * (p.alpha_plus - p.alpha_minus) / p.beta_plus, p.c_plus);
    EXPECT_LE((xi_p - expect_p).norm(), 1e-12 * (1 + expect_p.norm()));
    const Mat xi_m = saltation(sys, {"minus", "plus"}, 0.0, v2(0.0, -x2)).xi;
    const Mat expect_m = m2(p.beta_plus * p.c_minus / p.beta_minus, 0.0,
                            p.c_minus * (p.alpha_minus - p.alpha_plus) / p.beta_minus, p.c_minus);
    EXPECT_LE((xi_m - expect_m).norm(), 1e-12 * (1 + expect_m.norm()));
  }
}

TEST(Saltation, PlanarPwlUnitScalingMatchesDisplayedForm) {
  // With c = 1 the entry (alpha c - alpha') / beta equals c (alpha - alpha') / beta.
  PlanarPwlParams p{-0.1, -0.6, 1.3, 0.8, 1.0, 1.0};
  const Mat xi = saltation(make_planar_pwl(p), {"plus", "minus"}, 0.0, v2(0.0, 1.0)).xi;
  EXPECT_NEAR(xi(0, 0), p.beta_minus / p.beta_plus, 1e-14);
  EXPECT_NEAR(xi(1, 0), (p.alpha_plus * p.c_plus - p.alpha_minus) / p.beta_plus, 1e-14);
}

TEST(Saltation, PlanarShearExpands) {
  // beta = 1, c = 0.9 and alpha_+ - alpha_- = 0.3 / 0.9 give [[0.9, 0], [0.3, 0.9]].
  PlanarPwlParams p{0.0, -1.0 / 3.0, 1.0, 1.0, 0.9, 0.9};
  const SaltationRecord r = saltation(make_planar_pwl(p), {"plus", "minus"}, 0.0, v2(0.0, 1.0));
  EXPECT_LE((r.xi - m2(0.9, 0.0, 0.3, 0.9)).norm(), 1e-14);
  EXPECT_GT(r.induced_norm, 1.0);
  Eigen::JacobiSVD<Mat> svd(m2(1.0, 0.0, 0.3, 0.9));
  EXPECT_GT(svd.singularValues()(0), 1.0);
}

TEST(Saltation, TrafficOnsetHasRhoStructure) {
  const TrafficParams p;
  const HybridSystemSpec sys = make_traffic(p);
  for (double x1 : {55.0, 70.0, 100.0, 150.0}) {
    const double rho = traffic_rho(p, x1);
    EXPECT_GE(rho, 0.0);
    EXPECT_LT(rho, 1.0);
    for (double t : {0.0, 0.3, 0.8}) {
      const SaltationRecord r = saltation(sys, {"SbarCbar", "SbarC"}, t, v2(x1, p.x_bar));
      EXPECT_LE((r.xi - m2(1.0, rho, 0.0, 1.0 - rho)).norm(), 1e-12) << x1 << " " << t;
      EXPECT_NEAR(r.induced_norm, 1.0, 1e-12);
    }
  }
}

TEST(Saltation, TwoDofTouchdown) {
  MechParams p;
  p.m_p = 2.5;
  p.beta_p = 0.7;
  p.kappa = 3.0;
  p.kappa_p = 4.0;
  const HybridSystemSpec sys = make_mech_2dof(p);
  Vec x(4);
  x << 0.0, 0.3, -1.0, 0.2;
  const SaltationRecord r = saltation(sys, {"free", "contact"}, 0.0, x);
  Mat expect(2, 4);
  expect << 0, 1, 0, 0, -p.beta_p / p.m_p, 0, 0, 1;
  EXPECT_LE((r.xi - expect).norm(), 1e-12);
  EXPECT_GT(r.induced_norm, 1.0);
}

TEST(Saltation, PartsRecomputeXi) {
  const BuiltinSystem b = make_builtin("tv-reset");
  SamplingPlan plan = b.plan;
  plan.guard_samples = 10;
  for (const auto& tr : b.system.transitions) {
    for (const auto& gp : sample_guard(b.system, tr.key(), plan)) {
      const SaltationRecord r = saltation(b.system, tr.key(), gp.t, gp.x);
      EXPECT_LE((saltation_from_parts(r.parts) - r.xi).norm(), 1e-12 * (1 + r.xi.norm()));
      EXPECT_LT(r.parts.denominator, 0.0);
      // Xi - D_x R has rank at most one.
      Eigen::JacobiSVD<Mat> svd(r.xi - r.parts.dx_reset);
      const Vec s = svd.singularValues();
      if (s.size() > 1 && s(0) > 0) {
        EXPECT_LE(s(1), 1e-10 * s(0));
      }
    }
  }
}

TEST(Saltation, OffGuardAndTangentialPointsThrow) {
  const HybridSystemSpec sys = make_example1(Example1Params{});
  EXPECT_THROW(saltation(sys, {"R", "L"}, 0.0, v2(1.5, 1.0)), OffGuardError);
  // The R field at x1 = 1 is (-a_R, -b_R x2); make it tangent with a_R = 0.
  SystemDefinition def = example1_definition(Example1Params{});
  def.parameters["a_R"] = 0.0;
  EXPECT_THROW(saltation(compile(def), {"R", "L"}, 0.0, v2(1.0, 1.0)), TransversalityError);
}

TEST(Oracle, IdentityCase) {
  const HybridSystemSpec sys = make_example1({1.5, 0.7, 1.5, 0.7});
  const HybridState init = state_before_guard(sys, {"R", "L"}, 0.0, v2(1.0, 0.9), 0.1);
  const SaltationEstimate est = saltation_fd_oracle(sys, init, 0.2);
  EXPECT_LE((est.xi_hat - Mat::Identity(2, 2)).norm(), 1e-4);
}

TEST(Oracle, TrafficOnset) {
  const TrafficParams p;
  const HybridSystemSpec sys = make_traffic(p);
  const double t = 0.4, x1 = 90.0;
  const HybridState init = state_before_guard(sys, {"SbarCbar", "SbarC"}, t, v2(x1, p.x_bar), 1e-3);
  const SaltationEstimate est = saltation_fd_oracle(sys, init, 2e-3);
  const Mat xi = saltation(sys, est.event.key, est.event.t, est.event.x_minus).xi;
  EXPECT_EQ(est.event.key.to_string(), "SbarCbar->SbarC");
  EXPECT_LE(relative_error(est.xi_hat, xi), 1e-4);
}

TEST(Oracle, TwoDofTouchdown) {
  MechParams p;
  p.beta_p = 0.7;
  const HybridSystemSpec sys = make_mech_2dof(p);
  Vec x(4);
  x << 0.0, 0.3, -1.0, 0.2;
  const HybridState init = state_before_guard(sys, {"free", "contact"}, 0.0, x, 0.01);
  const SaltationEstimate est = saltation_fd_oracle(sys, init, 0.02);
  Mat expect(2, 4);
  expect << 0, 1, 0, 0, -p.beta_p / p.m_p, 0, 0, 1;
  EXPECT_LE(relative_error(est.xi_hat, expect), 1e-4);
}

TEST(Oracle, TimeVaryingReset) {
  const BuiltinSystem b = make_builtin("tv-reset");
  SamplingPlan plan = b.plan;
  plan.guard_samples = 8;
  int checked = 0;
  for (const auto& gp : sample_guard(b.system, {"A", "B"}, plan)) {
    try {
      const HybridState init = state_before_guard(b.system, {"A", "B"}, gp.t, gp.x, 1e-3);
      const SaltationEstimate est = saltation_fd_oracle(b.system, init, 2e-3);
      const Mat xi = saltation(b.system, est.event.key, est.event.t, est.event.x_minus).xi;
      EXPECT_LE(relative_error(est.xi_hat, xi), 1e-4);
      ++checked;
    } catch (const EventSequenceError&) {
    }
  }
  EXPECT_GE(checked, 4);
}

TEST(Variational, LinearSystemIsMatrixExponential) {
  const HybridSystemSpec sys = make_example1({0.5, 2.0, 0.5, 2.0});
  const VariationalSolution sol =
      variational_solve(sys, {"L", v2(0.5, 1.0), 0.0}, 2.0, Mat::Identity(2, 2));
  EXPECT_LE((sol.w_final - m2(std::exp(-1.0), 0, 0, std::exp(-4.0))).norm(), 1e-9);
}

TEST(Variational, OneDofImpactCollapsesToEmptyMatrix) {
  const HybridSystemSpec sys = make_mech_1dof(MechParams{});
  const VariationalSolution sol =
      variational_solve(sys, {"free", v2(1.0, 0.0), 0.0}, 10.0, Mat::Identity(2, 2));
  EXPECT_EQ(sol.w_final.rows(), 0);
  EXPECT_EQ(sol.w_final.cols(), 2);
  ASSERT_EQ(sol.jumps.size(), 1u);
  EXPECT_EQ(sol.jumps[0].xi.rows(), 0);
  EXPECT_EQ(sol.jumps[0].xi.cols(), 2);
}

TEST(Variational, BuiltinsMatchFiniteDifferences) {
  VariationalOptions vo;
  vo.simulation = oracle_simulation_options();
  for (const auto& name : builtin_names()) {
    const BuiltinSystem b = make_builtin(name);
    const int n = static_cast<int>(b.initial.x.size());
    // Traffic contracts so fast that by t = 1.5 |W| ~ 1e-5 and differences
    // with h = 1e-6 are dominated by integration error; 0.8 still crosses
    // four events.
    const double t_end = std::min(b.t_end, name == "traffic" ? 0.8 : 4.0);
    try {
      const VariationalSolution sol =
          variational_solve(b.system, b.initial, t_end, Mat::Identity(n, n), vo);
      const FlowJacobianFd fd = flow_jacobian_fd(b.system, b.initial, t_end, 1e-6, vo.simulation);
      EXPECT_LE(relative_error(sol.w_final, fd.jacobian), 1e-4) << name;
    } catch (const EventSequenceError& e) {
      ADD_FAILURE() << name << ": " << e.what();
    }
  }
}

TEST(Variational, JumpsApplySaltation) {
  const BuiltinSystem b = make_builtin("planar-pwl");
  const VariationalSolution sol =
      variational_solve(b.system, b.initial, 10.0, Mat::Identity(2, 2));
  ASSERT_FALSE(sol.jumps.empty());
  ASSERT_EQ(sol.fundamental.size(), sol.trajectory.arcs.size());
  for (std::size_t i = 0; i + 1 < sol.fundamental.size(); ++i) {
    const Mat& before = sol.fundamental[i].w_end;
    const Mat& after = sol.fundamental[i + 1].w_start;
    EXPECT_LE((sol.jumps[i].xi * before - after).norm(), 1e-12 * (1 + after.norm()));
  }
}

}  // namespace
}  // namespace hycon
