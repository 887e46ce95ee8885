#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hycon/errors.h"
#include "hycon/hybrid_model.h"
#include "hycon/system_definition.h"
#include "hycon/systems_library.h"

namespace hycon {
namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

HybridSystemSpec two_mode_linear(const Mat& A) {
  HybridSystemSpec sys;
  sys.name = "linear";
  ModeSpec a;
  a.id = "a";
  a.dim = 2;
  a.norm = NormSpec::L2(2);
  a.field = [A](double, const Vec& x) { return Vec(A * x); };
  a.region = Box{Vec::Constant(2, -1), Vec::Constant(2, 1)};
  ModeSpec b = a;
  b.id = "b";
  sys.modes = {a, b};
  Transition tr;
  tr.guard.source = "a";
  tr.guard.target = "b";
  tr.guard.g = [](double, const Vec& x) { return x(0); };
  tr.reset = ResetSpec::Identity("a", "b", 2);
  sys.transitions = {tr};
  return sys;
}

TEST(Validate, TrafficIsClean) {
  const auto diags = validate(make_traffic(TrafficParams{}));
  EXPECT_TRUE(diags.empty()) << (diags.empty() ? "" : diags.front().message);
}

TEST(Validate, EveryBuiltinExceptDwellIsClean) {
  for (const auto& name : builtin_names()) {
    const auto diags = validate(make_builtin(name).system);
    if (name == "dwell-scalar") {
      // Its guards depend on time only.
      ASSERT_FALSE(diags.empty());
      for (const auto& d : diags) EXPECT_EQ(d.kind, "nondegeneracy");
      continue;
    }
    EXPECT_TRUE(diags.empty()) << name << ": " << (diags.empty() ? "" : diags.front().message);
  }
}

TEST(Validate, ZeroGuardGradientGivesOneDiagnostic) {
  HybridSystemSpec sys = two_mode_linear(-Mat::Identity(2, 2));
  sys.transitions[0].guard.g = [](double, const Vec&) { return 1.0; };
  const auto diags = validate(sys);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].kind, "nondegeneracy");
  EXPECT_EQ(diags[0].location, "a->b");
}

TEST(Validate, ResetDimensionMismatchGivesOneDiagnostic) {
  HybridSystemSpec sys = two_mode_linear(-Mat::Identity(2, 2));
  sys.transitions[0].reset.identity = false;
  sys.transitions[0].reset.map = [](double, const Vec& x) { return Vec(x.head(1)); };
  sys.transitions[0].reset.jac_x = {};
  const auto diags = validate(sys);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].kind, "dimension");
}

TEST(Validate, StructuralErrors) {
  HybridSystemSpec sys = two_mode_linear(-Mat::Identity(2, 2));
  sys.transitions[0].reset.target = "c";
  sys.transitions[0].guard.target = "c";
  const auto diags = validate(sys);
  ASSERT_FALSE(diags.empty());
  EXPECT_EQ(diags[0].kind, "structure");
}

TEST(Validate, WrongAnalyticJacobianIsReported) {
  HybridSystemSpec sys = two_mode_linear(-Mat::Identity(2, 2));
  sys.modes[0].jacobian = [](double, const Vec&) { return Mat(Mat::Identity(2, 2)); };
  const auto diags = validate(sys);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].kind, "jacobian");
}

TEST(Jacobian, LinearFieldFiniteDifferenceIsExact) {
  Mat A(2, 2);
  A << -1, 2, 0.5, -3;
  const HybridSystemSpec sys = two_mode_linear(A);
  EXPECT_TRUE(jacobian_of_field(sys.modes[0], 0.0, v2(0.3, -0.2)).isApprox(A, 1e-10));
}

TEST(Jacobian, TrafficUncongestedHasLowerTriangularForm) {
  const TrafficParams p;
  const HybridSystemSpec sys = make_traffic(p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 150.0);
  for (const char* mode : {"SC", "SCbar", "SbarCbar"}) {
    for (int k = 0; k < 20; ++k) {
      const Vec x = v2(u(rng), u(rng));
      const Mat J = jacobian_of_field(sys.mode(mode), 0.3, x);
      EXPECT_NEAR(J(0, 0), -p.d_demand1(x(0)), 1e-12);
      EXPECT_DOUBLE_EQ(J(0, 1), 0.0);
      EXPECT_NEAR(J(1, 0), p.d_demand1(x(0)), 1e-12);
      EXPECT_NEAR(J(1, 1), -p.d_demand2(x(1)), 1e-12);
    }
  }
}

TEST(Jacobian, AnalyticMatchesFiniteDifferencesOnBuiltins) {
  std::mt19937_64 rng(5);
  for (const auto& name : builtin_names()) {
    const BuiltinSystem b = make_builtin(name);
    for (const auto& mode : b.system.modes) {
      if (mode.dim == 0 || !mode.jacobian || !mode.region) continue;
      for (int k = 0; k < 10; ++k) {
        Vec x(mode.dim);
        for (int i = 0; i < mode.dim; ++i) {
          x(i) = std::uniform_real_distribution<double>(mode.region->lo(i), mode.region->hi(i))(rng);
        }
        const double t = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
        const Mat analytic = mode.jacobian(t, x);
        const Mat fd = finite_difference_jacobian(mode.field, t, x, mode.dim);
        EXPECT_LE((analytic - fd).norm(), 1e-5 * std::max(1.0, analytic.norm()))
            << name << " " << mode.id.name;
      }
    }
  }
}

TEST(Evaluators, CallbackFailureCarriesCoordinates) {
  HybridSystemSpec sys = two_mode_linear(-Mat::Identity(2, 2));
  sys.modes[0].field = [](double, const Vec&) -> Vec { throw std::runtime_error("boom"); };
  try {
    eval_field(sys.modes[0], 1.5, v2(1, 2));
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("boom"), std::string::npos);
    EXPECT_NE(msg.find("1.5"), std::string::npos);
  }
}

TEST(Evaluators, ProjectToGuard) {
  GuardSpec g;
  g.g = [](double, const Vec& x) { return x.squaredNorm() - 1.0; };
  const auto p = project_to_guard(g, 0.0, v2(2.0, 1.0));
  ASSERT_TRUE(p.has_value());
  EXPECT_NEAR(p->norm(), 1.0, 1e-12);
}

TEST(Definition, JsonRoundTripPreservesEvaluators) {
  for (const auto& name : builtin_names()) {
    const BuiltinSystem b = make_builtin(name);
    if (!b.definition) continue;
    const HybridSystemSpec original = compile(*b.definition);
    const HybridSystemSpec reloaded =
        compile(definition_from_json(nlohmann::json::parse(definition_to_json(*b.definition).dump())));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
      const double t = u(rng) + 2.0;
      for (std::size_t m = 0; m < original.modes.size(); ++m) {
        const auto& a = original.modes[m];
        const auto& c = reloaded.modes[m];
        ASSERT_EQ(a.id, c.id);
        Vec x(a.dim);
        for (int i = 0; i < a.dim; ++i) x(i) = u(rng);
        EXPECT_LE((eval_field(a, t, x) - eval_field(c, t, x)).lpNorm<Eigen::Infinity>(), 1e-12);
      }
      for (std::size_t i = 0; i < original.transitions.size(); ++i) {
        const auto& a = original.transitions[i];
        const auto& c = reloaded.transitions[i];
        const int n = original.mode(a.guard.source).dim;
        Vec x(n);
        for (int j = 0; j < n; ++j) x(j) = u(rng);
        EXPECT_NEAR(eval_guard(a.guard, t, x), eval_guard(c.guard, t, x), 1e-12);
        EXPECT_LE((eval_reset(a.reset, t, x) - eval_reset(c.reset, t, x)).lpNorm<Eigen::Infinity>(),
                  1e-12);
      }
    }
  }
}

TEST(Definition, RejectsBadExpressionsAndDimensions) {
  SystemDefinition def = example1_definition(Example1Params{});
  def.modes[0].field[0] = "-a_L * y";
  EXPECT_THROW(compile(def), ConfigError);
  def = example1_definition(Example1Params{});
  def.modes[0].field.pop_back();
  EXPECT_THROW(compile(def), ConfigError);
}

TEST(Definition, LoadMissingFileNamesPath) {
  try {
    load_definition("/nonexistent/system.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/system.json"), std::string::npos);
  }
}

TEST(Definition, WeightExpressionsUseParameters) {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "name": "osc", "parameters": {"k": 4},
    "modes": [{"id": "m", "dim": 2, "norm": {"kind": "WeightedL2", "weight": [["k", 0], [0, 1]]},
               "field": ["x2", "-k*x1"]}],
    "transitions": []})");
  const HybridSystemSpec sys = compile(definition_from_json(j));
  EXPECT_EQ(sys.modes[0].norm.kind(), NormKind::kWeightedL2);
  EXPECT_DOUBLE_EQ(sys.modes[0].norm.weight()(0, 0), 4.0);
  EXPECT_NEAR(matrix_measure(jacobian_of_field(sys.modes[0], 0, v2(0, 0)), sys.modes[0].norm), 0.0,
              1e-12);
}

}  // namespace
}  // namespace hycon
