#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hycon/contraction.h"
#include "hycon/systems_library.h"
#include "hycon/variational.h"

namespace hycon {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Identity reset across x1 = 0 between two affine fields on the plane.
HybridSystemSpec switching_pair(const Vec& fa, const Vec& fb) {
  HybridSystemSpec sys;
  sys.name = "switching";
  ModeSpec a;
  a.id = "a";
  a.dim = 2;
  a.norm = NormSpec::L2(2);
  a.field = [fa](double, const Vec& x) { return Vec(fa - 0.1 * x); };
  a.region = Box{v2(0, -1), v2(1, 1)};
  ModeSpec b = a;
  b.id = "b";
  b.field = [fb](double, const Vec& x) { return Vec(fb - 0.1 * x); };
  b.region = Box{v2(-1, -1), v2(0, 1)};
  sys.modes = {a, b};
  Transition tr;
  tr.guard.source = "a";
  tr.guard.target = "b";
  tr.guard.g = [](double, const Vec& x) { return x(0); };
  tr.reset = ResetSpec::Identity("a", "b", 2);
  sys.transitions = {tr};
  return sys;
}

TEST(CertifyFlow, Example1MeasureIsWorstRate) {
  for (const Example1Params& p : {Example1Params{1, 1, 2, 1}, Example1Params{2, 0.5, 1, 3},
                                  Example1Params{0.3, 4, 5, 0.2}}) {
    const FlowCertificate c = certify_flow(make_example1(p), SamplingPlan{});
    const double expect =
        std::max(std::max(-p.a_L, -p.b_L), std::max(-p.a_R, -p.b_R));
    EXPECT_NEAR(c.c_hat, expect, 1e-12);
  }
}

TEST(CertifyFlow, TrafficGridIsNonpositive) {
  SamplingPlan plan;
  plan.grid_per_axis = 101;
  const FlowCertificate c = certify_flow(make_traffic(TrafficParams{}), plan);
  // The 101 x 101 grid is split among the four mode domains.
  EXPECT_GE(c.samples, 10000u);
  EXPECT_LE(c.c_hat, 0.0);
}

TEST(CertifyFlow, ViscoelasticIsZero) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int k = 0; k < 10; ++k) {
    MechParams p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const FlowCertificate c = certify_flow(make_mech_visco(p), SamplingPlan{});
    EXPECT_NEAR(c.c_hat, 0.0, 1e-9);
  }
}

TEST(CertifyResets, TrafficIsExactlyNonexpansive) {
  SamplingPlan plan;
  plan.guard_samples = 300;
  const ResetCertificate r = certify_resets(make_traffic(TrafficParams{}), plan);
  EXPECT_NEAR(r.K_hat, 1.0, 1e-9);
  EXPECT_EQ(r.per_transition.size(), 7u);
}

TEST(CertifyResets, TwoDofExpandsForRandomDraws) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(1e-3, 1.0);
  SamplingPlan plan;
  plan.guard_samples = 16;
  for (int k = 0; k < 25; ++k) {
    MechParams p;
    p.m_p = 10 * unit(rng);
    p.kappa = 1000 * unit(rng);
    p.kappa_p = 1000 * unit(rng);
    p.beta_p = 10 * unit(rng);
    const ResetCertificate r = certify_resets(make_mech_2dof(p), plan);
    EXPECT_GT(r.K_hat, 1.0);
  }
}

TEST(CertifyResets, SoftConstraintMetricChange) {
  // Xi = I at both transitions; only the energy metrics differ.
  MechParams p;
  p.kappa = 2.0;
  p.kappa_pp = 6.0;
  const HybridSystemSpec sys = make_mech_soft(p);
  const SaltationRecord on = saltation(sys, {"free", "contact"}, 0.0, v2(0.0, -1.0));
  const SaltationRecord off = saltation(sys, {"contact", "free"}, 0.0, v2(0.0, 1.0));
  EXPECT_LE((on.xi - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LE((off.xi - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_NEAR(on.induced_norm, std::sqrt((p.kappa + p.kappa_pp) / p.kappa), 1e-12);
  EXPECT_NEAR(off.induced_norm, 1.0, 1e-12);
}

TEST(Certify, VerdictsAndWitnesses) {
  SamplingPlan plan;
  plan.guard_samples = 64;
  const ContractionCertificate good = certify(make_example1({1, 1, 2, 1}), plan);
  EXPECT_EQ(good.verdict, Verdict::kContractiveNonexpansiveResets);
  const ContractionCertificate bad = certify(make_mech_2dof(MechParams{}), plan);
  EXPECT_EQ(bad.verdict, Verdict::kViolated);
  // Witnesses reproduce the extrema.
  const HybridSystemSpec sys = make_mech_2dof(MechParams{});
  const Witness& w = bad.resets.witness;
  const auto arrow = w.location.find("->");
  ASSERT_NE(arrow, std::string::npos);
  const TransitionKey key{w.location.substr(0, arrow), w.location.substr(arrow + 2)};
  EXPECT_NEAR(saltation(sys, key, w.t, w.x).induced_norm, bad.resets.K_hat, 1e-12);
  const Witness& fw = bad.flow.witness;
  const ModeSpec& mode = sys.mode(fw.location);
  EXPECT_NEAR(matrix_measure(jacobian_of_field(mode, fw.t, fw.x), mode.norm), bad.flow.c_hat,
              1e-12);
}

TEST(Certify, EnvelopeOnlyWithDwellBounds) {
  const BuiltinSystem b = make_builtin("dwell-scalar");
  CertifyOptions opt;
  opt.tau_lower = 1.0;
  opt.tau_upper = 2.0;
  const ContractionCertificate c = certify(b.system, b.plan, opt);
  EXPECT_NEAR(c.flow.c_hat, -1.0, 1e-12);
  EXPECT_NEAR(c.resets.K_hat, 2.0, 1e-12);
  EXPECT_EQ(c.verdict, Verdict::kEnvelopeOnly);
  ASSERT_TRUE(c.envelope.has_value());
  EXPECT_TRUE(c.envelope->contractive_flag());
}

TEST(Certify, MoreSamplesNeverLowerTheEvidence) {
  const HybridSystemSpec sys = make_traffic(TrafficParams{});
  SamplingPlan small;
  small.refine = false;
  small.flow_samples = 64;
  small.guard_samples = 32;
  SamplingPlan large = small;
  large.flow_samples = 256;
  large.guard_samples = 128;
  const ContractionCertificate a = certify(sys, small);
  const ContractionCertificate b = certify(sys, large);
  EXPECT_GE(b.flow.c_hat, a.flow.c_hat);
  EXPECT_GE(b.resets.K_hat, a.resets.K_hat);
}

TEST(Envelope, UnitJumpGainCollapses) {
  const DwellEnvelope env{-1.0, 1.0, 0.5, 3.0};
  EXPECT_NEAR(envelope_bound(env, 2.0, 1.0, 4.0), 2.0 * std::exp(-3.0), 1e-15);
  for (double s : {0.0, 0.7}) {
    for (double t : {s, s + 0.3, s + 5.0}) {
      EXPECT_EQ(envelope_bound({-0.4, 1.0, 1.0, 2.0}, 1.5, s, t), std::exp(-0.4 * (t - s)) * 1.5);
    }
  }
}

TEST(Envelope, ContractiveFlag) {
  const DwellEnvelope env{-1.0, 2.0, 1.0, 2.0};
  EXPECT_TRUE(env.contractive_flag());
  EXPECT_NEAR(std::max(2.0 * std::exp(-1.0), 2.0 * std::exp(-2.0)), 0.7357588823428847, 1e-15);
  EXPECT_FALSE((DwellEnvelope{0.0, 2.0, 1.0, 2.0}.contractive_flag()));
}

TEST(Envelope, DisplayedExponents) {
  // max{K^ceil(t / tau_lower), K^floor((t - s) / tau_upper)} e^{c (t - s)} d_s
  const DwellEnvelope env{-1.0, 2.0, 1.0, 2.0};
  const double s = 0.5, t = 3.2;
  const double expect = std::max(std::pow(2.0, std::ceil(t / 1.0)), std::pow(2.0, std::floor((t - s) / 2.0))) *
                        std::exp(-(t - s)) * 0.3;
  EXPECT_NEAR(envelope_bound(env, 0.3, s, t), expect, 1e-15);
  // Unbounded dwell and zero distance conventions.
  EXPECT_EQ(envelope_bound({-1.0, 2.0, 1.0, std::numeric_limits<double>::infinity()}, 0.0, 0.0, 2.0), 0.0);
}

TEST(TranslationReset, IdenticalFieldsAreAligned) {
  const TranslationResetReport r =
      check_translation_reset(switching_pair(v2(-1, 0), v2(-1, 0)), {"a", "b"}, SamplingPlan{});
  ASSERT_TRUE(r.applicable) << r.reason;
  EXPECT_NEAR(r.min_norm, 1.0, 1e-12);
  EXPECT_NEAR(r.max_norm, 1.0, 1e-12);
  ASSERT_FALSE(r.alignment.empty());
  for (const auto& a : r.alignment) {
    EXPECT_NEAR(a.alpha, 0.0, 1e-12);
    EXPECT_TRUE(a.aligned && a.admissible);
  }
}

TEST(TranslationReset, Example1AlignmentAlongGuardNormal) {
  const Example1Params p{1.0, 1.0, 2.0, 1.0};
  SamplingPlan plan;
  plan.guard_samples = 20;
  const TranslationResetReport r = check_translation_reset(make_example1(p), {"R", "L"}, plan);
  ASSERT_TRUE(r.applicable) << r.reason;
  EXPECT_TRUE(r.two_norm);
  EXPECT_EQ(r.alignment_mismatches, 0u);
  for (const auto& a : r.alignment) {
    EXPECT_NEAR(a.alpha, (p.a_R - p.a_L) * a.x(0), 1e-12);
    EXPECT_NEAR(a.alpha_max, 2.0 * p.a_R * a.x(0), 1e-12);
    EXPECT_TRUE(a.aligned && a.admissible);
    EXPECT_NEAR(a.xi_norm, 1.0, 1e-12);
  }
}

TEST(TranslationReset, TangentialDifferenceExpands) {
  const double eps = 0.2;
  const TranslationResetReport r =
      check_translation_reset(switching_pair(v2(-1, 0), v2(-1, eps)), {"a", "b"}, SamplingPlan{});
  ASSERT_TRUE(r.applicable);
  EXPECT_TRUE(r.lower_bound_holds);
  EXPECT_GT(r.min_norm, 1.0);
  for (const auto& a : r.alignment) EXPECT_FALSE(a.aligned);
}

TEST(TranslationReset, NonIdentityJacobianIsInapplicable) {
  const TranslationResetReport r =
      check_translation_reset(make_planar_pwl({-0.2, -0.2, 1, 1, 0.5, 0.5}), {"plus", "minus"},
                              SamplingPlan{});
  EXPECT_FALSE(r.applicable);
}

TEST(SwitchingSurface, ContinuousFieldGivesZero) {
  const SwitchingSurfaceReport r =
      check_switching_surface(switching_pair(v2(-1, 0.5), v2(-1, 0.5)), {"a", "b"}, SamplingPlan{});
  ASSERT_TRUE(r.applicable) << r.reason;
  EXPECT_NEAR(r.max_mu_M, 0.0, 1e-14);
  EXPECT_TRUE(r.consistent);
}

TEST(SwitchingSurface, TrafficOnsetIsConsistent) {
  SamplingPlan plan;
  plan.guard_samples = 100;
  const SwitchingSurfaceReport r =
      check_switching_surface(make_traffic(TrafficParams{}), {"SbarCbar", "SbarC"}, plan);
  ASSERT_TRUE(r.applicable) << r.reason;
  ASSERT_FALSE(r.samples.empty());
  for (const auto& s : r.samples) {
    EXPECT_NEAR(s.xi_norm, 1.0, 1e-12);
    EXPECT_LE(s.mu_beta_M, 1e-9);
  }
  EXPECT_TRUE(r.consistent);
}

TEST(SwitchingSurface, PositiveMeasureCoOccursWithExpansion) {
  const SwitchingSurfaceReport r =
      check_switching_surface(switching_pair(v2(-1, 0), v2(-1, 1)), {"a", "b"}, SamplingPlan{});
  ASSERT_TRUE(r.applicable);
  EXPECT_GT(r.max_mu_beta_M, 0.0);
  EXPECT_GT(r.max_xi_norm, 1.0);
  EXPECT_GT(r.expansion_co_occurrences, 0u);
}

TEST(Experiment, IdenticalInitsHaveZeroDistance) {
  const HybridSystemSpec sys = make_example1({1, 1, 2, 1});
  const HybridState s{"R", v2(1.5, 1.0), 0.0};
  const ExperimentReport r =
      pairwise_contraction_experiment(sys, {{s, s}}, 2.0, DwellEnvelope{-1.0, 1.0, 0.0});
  ASSERT_EQ(r.pairs.size(), 1u);
  for (double d : r.pairs[0].distances) EXPECT_EQ(d, 0.0);
}

TEST(Experiment, Example1ContractsWithinEnvelope) {
  const HybridSystemSpec sys = make_example1({1, 1, 2, 1});
  std::vector<std::pair<HybridState, HybridState>> pairs;
  for (int k = 0; k < 3; ++k) {
    pairs.push_back({{"L", v2(0.9 - 0.1 * k, 1.0), 0.0}, {"R", v2(1.05 + 0.1 * k, 0.8), 0.0}});
  }
  pairs.push_back({{"L", v2(0.5, 1.0), 0.0}, {"L", v2(0.6, 1.2), 0.0}});
  ExperimentOptions opt;
  opt.grid = 21;
  const ExperimentReport r = pairwise_contraction_experiment(sys, pairs, 2.0, {-1.0, 1.0, 0.0}, opt);
  EXPECT_LE(r.max_ratio, 1.0 + 1e-6);
  for (const auto& p : r.pairs) EXPECT_TRUE(p.error.empty()) << p.error;
}

TEST(Experiment, AmbientDistanceUsesModeNorm) {
  const HybridSystemSpec sys = make_traffic(TrafficParams{});
  EXPECT_DOUBLE_EQ(ambient_distance(sys, {"SC", v2(1, 2), 0}, {"SbarC", v2(4, -2), 0}), 7.0);
}

}  // namespace
}  // namespace hycon
