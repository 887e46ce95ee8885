#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hycon/contraction.h"
#include "hycon/hybrid_model.h"
#include "hycon/system_definition.h"

namespace hycon {

using ParameterMap = std::map<std::string, double>;

// Two diagonal linear modes L, R on the positive orthant split at x1 = 1.
struct Example1Params {
  double a_L{1.0};
  double b_L{1.0};
  double a_R{2.0};
  double b_R{1.0};
};
SystemDefinition example1_definition(const Example1Params& p);
HybridSystemSpec make_example1(const Example1Params& p);

// Spiral fields A = [[alpha, -beta], [beta, alpha]] on the half-planes
// "plus" (x1 >= 0) and "minus" (x1 <= 0); leaving a half-plane scales x2.
struct PlanarPwlParams {
  double alpha_plus{-0.2};
  double alpha_minus{-0.2};
  double beta_plus{1.0};
  double beta_minus{1.0};
  double c_plus{1.0};
  double c_minus{1.0};
};
SystemDefinition planar_pwl_definition(const PlanarPwlParams& p);
HybridSystemSpec make_planar_pwl(const PlanarPwlParams& p);

// Two-cell traffic network with capacity-drop hysteresis.  Demand
// D_i(x) = q_i (1 - exp(-x / theta)), supply S2(x) = w (x_jam - x), inflow
// u(t) = u_mean + u_amp sin(2 pi t / u_period).
struct TrafficParams {
  double q1{2400.0};
  double q2{1900.0};
  double theta{33.0};
  double w{20.0};
  double x_jam{160.0};
  double x_bar{65.0};
  double x_under{35.0};
  double u_mean{1500.0};
  double u_amp{700.0};
  double u_period{1.0};

  double demand1(double x) const;
  double demand2(double x) const;
  double supply2(double x) const;
  double d_demand1(double x) const;
  double d_demand2(double x) const;
  double d_supply2(double x) const;
  double inflow(double t) const;
};

// Root of D2 = S2 on [0, x_jam] by bisection.
double traffic_critical_density(const TrafficParams& p);
// (D1(x1) - S2(x_bar)) / (D1(x1) - D2(x_bar)).
double traffic_rho(const TrafficParams& p, double x1);
// Throws ConfigError when the parameters violate their invariants.
void check_traffic(const TrafficParams& p);
// From the parameter names of the "traffic" built-in; missing names keep
// their defaults.
TrafficParams traffic_params_from(const ParameterMap& m);
HybridSystemSpec make_traffic(const TrafficParams& p);

// Scalar spring-damper variants.  kappa, beta, m belong to the first mass,
// kappa_p, beta_p, m_p to the second (or to the series element), kappa_pp
// to the contact or series spring.  Input u(t) = u_bias + u_amp sin(2 pi
// u_freq t).
struct MechParams {
  double m{1.0};
  double m_p{1.0};
  double kappa{1.0};
  double kappa_p{1.0};
  double kappa_pp{1.0};
  double beta{1.0};
  double beta_p{1.0};
  double u_bias{-1.0};
  double u_amp{0.0};
  double u_freq{1.0};

  double input(double t) const;
  double d_input(double t) const;
};

// Modes "free" and "contact".
HybridSystemSpec make_mech_1dof(const MechParams& p);
HybridSystemSpec make_mech_2dof(const MechParams& p);
HybridSystemSpec make_mech_soft(const MechParams& p);
HybridSystemSpec make_mech_visco(const MechParams& p);

// Energy |x|^2 in the energy norm of the current mode (the stored energy
// for u = 0).
double mechanical_energy(const HybridSystemSpec& sys, const HybridState& s);

// Scalar modes "1" and "2" with zero fields; 1 -> 2 when x <= t.
SystemDefinition toy_moving_guard_definition();

// x' = -x in modes A and B, resets x -> 2 x at the zeros of cos(pi t), so
// consecutive resets are one time unit apart.
SystemDefinition dwell_scalar_definition(double gain = 2.0, double rate = 1.0);

// Planar system with a moving guard and a time-varying reset.
SystemDefinition tv_reset_definition();

struct BuiltinSystem {
  std::string name;
  HybridSystemSpec system;
  HybridState initial;
  double t_end{10.0};
  SamplingPlan plan;
  ParameterMap parameters;  // resolved, including derived values
  std::optional<SystemDefinition> definition;
};

std::vector<std::string> builtin_names();
// Default parameters of a built-in.
ParameterMap builtin_parameters(const std::string& name);
// Throws ConfigError for unknown names, unknown parameters or invalid
// values.  Override names match ignoring underscores ("aL" sets "a_L").
BuiltinSystem make_builtin(const std::string& name, const ParameterMap& overrides = {});

}  // namespace hycon
