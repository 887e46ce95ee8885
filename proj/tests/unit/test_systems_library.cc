#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hycon/contraction.h"
#include "hycon/errors.h"
#include "hycon/simulator.h"
#include "hycon/systems_library.h"
#include "hycon/variational.h"

namespace hycon {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::vector<double> symmetric_spectrum(const ModeSpec& mode) {
  const Vec x = Vec::Zero(mode.dim);
  const Mat S = weighted_symmetric_part(jacobian_of_field(mode, 0.0, x), mode.norm.weight());
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end());
  return out;
}

void expect_spectrum(std::vector<double> actual, std::vector<double> expect, double rel) {
  std::sort(expect.begin(), expect.end());
  ASSERT_EQ(actual.size(), expect.size());
  double scale = 1.0;
  for (double e : expect) scale = std::max(scale, std::abs(e));
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_NEAR(actual[i], expect[i], rel * scale) << i;
  }
}

MechParams random_mech(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 5.0);
  MechParams p;
  p.m = u(rng);
  p.m_p = u(rng);
  p.kappa = u(rng);
  p.kappa_p = u(rng);
  p.kappa_pp = u(rng);
  p.beta = u(rng);
  p.beta_p = u(rng);
  return p;
}

TEST(Example1, CertifiesWhenRatesMatch) {
  SamplingPlan plan;
  plan.guard_samples = 32;
  EXPECT_EQ(certify(make_example1({1, 1, 2, 1}), plan).verdict,
            Verdict::kContractiveNonexpansiveResets);
  EXPECT_EQ(certify(make_example1({2, 1, 1, 1}), plan).verdict, Verdict::kViolated);
  EXPECT_EQ(certify(make_example1({1, 1, 2, 3}), plan).verdict, Verdict::kViolated);
}

TEST(Example1, RejectsNonpositiveParameters) {
  EXPECT_THROW(make_example1({0, 1, 1, 1}), ConfigError);
  EXPECT_THROW(make_example1({1, 1, 1, -2}), ConfigError);
}

TEST(PlanarPwl, MeasureIsAlpha) {
  const HybridSystemSpec sys = make_planar_pwl({-0.3, 0.2, 1.5, 0.5, 1, 1});
  EXPECT_NEAR(matrix_measure(jacobian_of_field(sys.mode("plus"), 0, v2(1, 0)), sys.mode("plus").norm),
              -0.3, 1e-14);
  EXPECT_NEAR(matrix_measure(jacobian_of_field(sys.mode("minus"), 0, v2(-1, 0)), sys.mode("minus").norm),
              0.2, 1e-14);
}

TEST(PlanarPwl, SymmetricCaseHasUnitSaltation) {
  const HybridSystemSpec sys = make_planar_pwl({-0.2, -0.2, 1.0, 1.0, 1.0, 1.0});
  const SaltationRecord r = saltation(sys, {"plus", "minus"}, 0.0, v2(0.0, 0.7));
  EXPECT_LE((r.xi - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_NEAR(r.induced_norm, 1.0, 1e-14);
}

TEST(PlanarPwl, RejectsNonpositiveScales) {
  EXPECT_THROW(make_planar_pwl({-0.2, -0.2, 0.0, 1.0, 1.0, 1.0}), ConfigError);
  EXPECT_THROW(make_planar_pwl({-0.2, -0.2, 1.0, 1.0, -1.0, 1.0}), ConfigError);
}

TEST(Traffic, CriticalDensityAndInvariants) {
  const TrafficParams p;
  const double xc = traffic_critical_density(p);
  EXPECT_NEAR(p.demand2(xc), p.supply2(xc), 1e-9);
  EXPECT_LT(p.x_bar, xc);
  TrafficParams bad = p;
  bad.x_bar = xc + 1.0;
  EXPECT_THROW(check_traffic(bad), ConfigError);
  bad = p;
  bad.x_under = p.x_bar + 1.0;
  EXPECT_THROW(check_traffic(bad), ConfigError);
}

TEST(Traffic, DemandAndSupplyShapes) {
  const TrafficParams p;
  EXPECT_EQ(p.demand1(0.0), 0.0);
  EXPECT_EQ(p.demand2(0.0), 0.0);
  EXPECT_NEAR(p.supply2(p.x_jam), 0.0, 1e-12);
  for (double x = 1.0; x < p.x_jam; x += 7.0) {
    EXPECT_GT(p.d_demand1(x), 0.0);
    EXPECT_GT(p.d_demand2(x), 0.0);
    EXPECT_LT(p.d_supply2(x), 0.0);
  }
}

TEST(Traffic, RhoInUnitIntervalAboveSupply) {
  const TrafficParams p;
  for (double x1 = 0.0; x1 <= 200.0; x1 += 0.5) {
    if (p.demand1(x1) < p.supply2(p.x_bar)) continue;
    const double rho = traffic_rho(p, x1);
    EXPECT_GE(rho, 0.0);
    EXPECT_LT(rho, 1.0);
  }
}

TEST(Traffic, ParametersFromMap) {
  const TrafficParams p = traffic_params_from({{"q1", 2000.0}, {"xbar", 60.0}});
  EXPECT_EQ(p.q1, 2000.0);
  EXPECT_EQ(p.x_bar, 60.0);
  EXPECT_EQ(p.q2, TrafficParams{}.q2);
}

TEST(Mech1Dof, SymmetricPartAndMeasure) {
  MechParams p;
  p.beta = 0.6;
  p.kappa = 3.0;
  p.m = 2.0;
  const HybridSystemSpec sys = make_mech_1dof(p);
  const ModeSpec& free = sys.mode("free");
  const Mat S = weighted_symmetric_part(jacobian_of_field(free, 0, v2(1, 0)), free.norm.weight());
  Mat expect = Mat::Zero(2, 2);
  expect(1, 1) = -p.beta;
  EXPECT_LE((S - expect).norm(), 1e-14);
  EXPECT_NEAR(matrix_measure(jacobian_of_field(free, 0, v2(1, 0)), free.norm), 0.0, 1e-12);
  EXPECT_EQ(sys.mode("contact").dim, 0);
}

TEST(Mech2Dof, FreeSpectrum) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 20; ++k) {
    const MechParams p = random_mech(rng);
    const HybridSystemSpec sys = make_mech_2dof(p);
    const double r = std::sqrt(p.beta * p.beta + 4 * p.beta_p * p.beta_p);
    expect_spectrum(symmetric_spectrum(sys.mode("free")),
                    {0.0, 0.0, -0.5 * (p.beta + 2 * p.beta_p + r), -0.5 * (p.beta + 2 * p.beta_p - r)},
                    1e-12);
    EXPECT_EQ(sys.mode("contact").dim, 2);
  }
}

TEST(Mech2Dof, WitnessLowerBound) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(1e-3, 1.0);
  Vec x(4);
  x << 0.0, 0.3, -1.0, 0.2;
  for (int k = 0; k < 200; ++k) {
    MechParams p;
    p.m_p = 10 * unit(rng);
    p.kappa = 1000 * unit(rng);
    p.kappa_p = 1000 * unit(rng);
    p.beta_p = 10 * unit(rng);
    const double norm = saltation(make_mech_2dof(p), {"free", "contact"}, 0.0, x).induced_norm;
    EXPECT_GT(norm, 1.0);
    EXPECT_GE(norm, p.beta_p / std::sqrt(p.m_p * (p.kappa + p.kappa_p)) * (1 - 1e-12));
  }
}

TEST(MechSoft, IdentityResetsAndMetrics) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 10; ++k) {
    const MechParams p = random_mech(rng);
    const HybridSystemSpec sys = make_mech_soft(p);
    for (const auto& tr : sys.transitions) {
      EXPECT_TRUE(tr.reset.identity) << tr.key().to_string();
    }
    const Mat E0 = sys.mode("free").norm.weight();
    const Mat E1 = sys.mode("contact").norm.weight();
    EXPECT_NEAR(E0(0, 0), p.kappa, 1e-14);
    EXPECT_NEAR(E1(0, 0), p.kappa + p.kappa_pp, 1e-14);
    EXPECT_NEAR(E0(1, 1), p.m, 1e-14);
    EXPECT_NEAR(E1(1, 1), p.m, 1e-14);
  }
}

TEST(MechVisco, Spectra) {
  std::mt19937_64 rng(44);
  for (int k = 0; k < 20; ++k) {
    const MechParams p = random_mech(rng);
    const HybridSystemSpec sys = make_mech_visco(p);
    const double c = p.kappa_pp * p.kappa_pp / p.beta_p;
    expect_spectrum(symmetric_spectrum(sys.mode("free")), {0, 0, 0, -p.beta, -3 * c}, 1e-9);
    expect_spectrum(symmetric_spectrum(sys.mode("contact")), {0, 0, -2 * c}, 1e-9);
    for (const char* m : {"free", "contact"}) {
      const ModeSpec& mode = sys.mode(m);
      EXPECT_NEAR(matrix_measure(jacobian_of_field(mode, 0, Vec::Zero(mode.dim)), mode.norm), 0.0,
                  1e-9);
    }
  }
}

TEST(MechVisco, LiftoffIsIsometryTouchdownIsNot) {
  MechParams p;
  p.kappa = 2.0;
  p.kappa_p = 3.0;
  p.kappa_pp = 1.5;
  const BuiltinSystem b = make_builtin("mech-visco", {{"kappa", 2.0}, {"kappa_p", 3.0}, {"kappa_pp", 1.5}});
  SamplingPlan plan = b.plan;
  plan.guard_samples = 16;
  const ResetCertificate r = certify_resets(b.system, plan);
  for (const auto& w : r.per_transition) {
    if (w.location == "contact->free") EXPECT_NEAR(w.value, 1.0, 1e-9);
    if (w.location == "free->contact") {
      EXPECT_NEAR(w.value, std::sqrt((p.kappa + p.kappa_p + p.kappa_pp) / p.kappa), 1e-9);
    }
  }
}

TEST(Mechanical, EnergyNonincreasingWithoutInput) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const std::string name : {"mech-1dof", "mech-2dof", "mech-soft", "mech-visco"}) {
    for (int k = 0; k < 5; ++k) {
      const BuiltinSystem b = make_builtin(name, {{"u_bias", 0.0}, {"u_amp", 0.0}});
      Vec x0 = b.initial.x;
      for (int i = 0; i < x0.size(); ++i) x0(i) = 0.5 + 0.5 * u(rng);
      // Start above the contact.
      x0(0) = 0.2 + std::abs(x0(0));
      const auto traj = simulate(b.system, {"free", x0, 0.0}, 8.0);
      ASSERT_EQ(traj.status, TrajectoryStatus::kCompleted) << name << traj.message;
      double prev = mechanical_energy(b.system, traj.initial);
      for (int s = 1; s <= 160; ++s) {
        const double e = mechanical_energy(b.system, traj.state_at(0.05 * s));
        EXPECT_LE(e, prev + 1e-8 * (1 + prev)) << name << " t=" << 0.05 * s;
        prev = e;
      }
    }
  }
}

TEST(Builtins, NamesParametersAndOverrides) {
  const auto names = builtin_names();
  for (const char* n : {"example1", "planar-pwl", "traffic", "mech-1dof", "mech-2dof", "mech-soft",
                        "mech-visco", "toy-moving-guard", "dwell-scalar", "tv-reset"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
  const BuiltinSystem b = make_builtin("example1", {{"aL", 3.0}});
  EXPECT_EQ(b.parameters.at("a_L"), 3.0);
  EXPECT_THROW(make_builtin("nope"), ConfigError);
  EXPECT_THROW(make_builtin("example1", {{"zeta", 1.0}}), ConfigError);
  EXPECT_THROW(make_builtin("traffic", {{"xbar", 150.0}}), ConfigError);
  const BuiltinSystem t = make_builtin("traffic");
  EXPECT_GT(t.parameters.at("xcrit"), t.parameters.at("xbar"));
}

TEST(Builtins, EveryBuiltinSimulates) {
  for (const auto& name : builtin_names()) {
    const BuiltinSystem b = make_builtin(name);
    const auto traj = simulate(b.system, b.initial, b.t_end);
    EXPECT_EQ(traj.status, TrajectoryStatus::kCompleted) << name << ": " << traj.message;
  }
}

TEST(DwellScalar, ResetsOneUnitApart) {
  const BuiltinSystem b = make_builtin("dwell-scalar");
  const auto traj = simulate(b.system, b.initial, b.t_end);
  ASSERT_GE(traj.events.size(), 3u);
  for (std::size_t i = 0; i + 1 < traj.events.size(); ++i) {
    EXPECT_NEAR(traj.events[i + 1].t - traj.events[i].t, 1.0, 1e-9);
    EXPECT_NEAR(traj.events[i].x_plus(0), 2.0 * traj.events[i].x_minus(0), 1e-15);
  }
}

}  // namespace
}  // namespace hycon
