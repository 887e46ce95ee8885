#include "hycon/systems_library.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hycon/errors.h"

namespace hycon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Velocity threshold of the touchdown applicability condition.
constexpr double kTouchdownTol = 1e-12;

void require_positive(const std::string& name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "parameter " << name << " must be positive (got " << v << ")";
    throw ConfigError(os.str());
  }
}

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Box b;
  b.lo = Eigen::Map<const Vec>(lo.begin(), static_cast<Eigen::Index>(lo.size()));
  b.hi = Eigen::Map<const Vec>(hi.begin(), static_cast<Eigen::Index>(hi.size()));
  return b;
}

Vec vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vec>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

Mat block_diag(const Mat& a, const Mat& b) {
  Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

// Linear time-invariant part A x plus an input term along `input_dir`.
ModeSpec linear_mode(const ModeId& id, const Mat& A, const Vec& input_dir, const MechParams& p,
                     const Mat& E, std::vector<std::string> names) {
  ModeSpec m;
  m.id = id;
  m.dim = static_cast<int>(A.rows());
  m.norm = m.dim == 0 ? NormSpec::L2(0) : NormSpec::Weighted(E);
  m.field = [A, input_dir, p](double t, const Vec& x) {
    return Vec(A * x + input_dir * p.input(t));
  };
  m.jacobian = [A](double, const Vec&) { return A; };
  m.time_partial = [input_dir, p](double t, const Vec&) {
    return Vec(input_dir * p.d_input(t));
  };
  m.state_names = std::move(names);
  return m;
}

// Linear guard w . x - c_u u(t) - c0.
GuardSpec linear_guard(const ModeId& src, const ModeId& dst, const Vec& w, double c_u,
                       const MechParams& p) {
  GuardSpec g;
  g.source = src;
  g.target = dst;
  g.g = [w, c_u, p](double t, const Vec& x) { return w.dot(x) - c_u * p.input(t); };
  g.grad_x = [w](double, const Vec&) { return w; };
  g.d_t = [c_u, p](double t, const Vec&) { return -c_u * p.d_input(t); };
  return g;
}

ResetSpec linear_reset(const ModeId& src, const ModeId& dst, const Mat& R) {
  ResetSpec r;
  r.source = src;
  r.target = dst;
  r.map = [R](double, const Vec& x) { return Vec(R * x); };
  r.jac_x = [R](double, const Vec&) { return R; };
  return r;
}

void check_mech(const MechParams& p, std::initializer_list<const char*> used) {
  const std::map<std::string, double> all{
      {"m", p.m},         {"m_p", p.m_p},   {"kappa", p.kappa}, {"kappa_p", p.kappa_p},
      {"kappa_pp", p.kappa_pp}, {"beta", p.beta}, {"beta_p", p.beta_p}};
  for (const char* name : used) require_positive(name, all.at(name));
  if (!std::isfinite(p.u_bias) || !std::isfinite(p.u_amp) || !std::isfinite(p.u_freq))
    throw ConfigError("input parameters must be finite");
}

ParameterMap mech_map(const MechParams& p, std::initializer_list<const char*> used) {
  const std::map<std::string, double> all{
      {"m", p.m},         {"m_p", p.m_p},   {"kappa", p.kappa}, {"kappa_p", p.kappa_p},
      {"kappa_pp", p.kappa_pp}, {"beta", p.beta}, {"beta_p", p.beta_p}};
  ParameterMap out;
  for (const char* name : used) out[name] = all.at(name);
  out["u_bias"] = p.u_bias;
  out["u_amp"] = p.u_amp;
  out["u_freq"] = p.u_freq;
  return out;
}

MechParams mech_from(const ParameterMap& m) {
  MechParams p;
  auto get = [&m](const char* k, double& v) {
    if (auto it = m.find(k); it != m.end()) v = it->second;
  };
  get("m", p.m);
  get("m_p", p.m_p);
  get("kappa", p.kappa);
  get("kappa_p", p.kappa_p);
  get("kappa_pp", p.kappa_pp);
  get("beta", p.beta);
  get("beta_p", p.beta_p);
  get("u_bias", p.u_bias);
  get("u_amp", p.u_amp);
  get("u_freq", p.u_freq);
  return p;
}

constexpr std::initializer_list<const char*> kUsed1 = {"m", "kappa", "beta"};
constexpr std::initializer_list<const char*> kUsed2 = {"m", "m_p", "kappa", "kappa_p", "beta",
                                                       "beta_p"};
constexpr std::initializer_list<const char*> kUsedSoft = {"m", "kappa", "kappa_pp", "beta"};
constexpr std::initializer_list<const char*> kUsedVisco = {
    "m", "m_p", "kappa", "kappa_p", "kappa_pp", "beta", "beta_p"};

}  // namespace

// ---------------------------------------------------------------- example 1

SystemDefinition example1_definition(const Example1Params& p) {
  require_positive("a_L", p.a_L);
  require_positive("b_L", p.b_L);
  require_positive("a_R", p.a_R);
  require_positive("b_R", p.b_R);
  SystemDefinition d;
  d.name = "example1";
  d.parameters = {{"a_L", p.a_L}, {"b_L", p.b_L}, {"a_R", p.a_R}, {"b_R", p.b_R}};
  ModeDefinition L;
  L.id = "L";
  L.dim = 2;
  L.state = {"x1", "x2"};
  L.norm_kind = "L2";
  L.field = {"-a_L*x1", "-b_L*x2"};
  L.domain = {"1 - x1", "x1", "x2"};
  L.region = make_box({0.0, 0.0}, {1.0, 2.0});
  ModeDefinition R = L;
  R.id = "R";
  R.field = {"-a_R*x1", "-b_R*x2"};
  R.domain = {"x1 - 1", "x2"};
  R.region = make_box({1.0, 0.0}, {3.0, 2.0});
  d.modes = {L, R};
  d.transitions = {{"L", "R", "1 - x1", {"x1", "x2"}, ""},
                   {"R", "L", "x1 - 1", {"x1", "x2"}, ""}};
  return d;
}

HybridSystemSpec make_example1(const Example1Params& p) { return compile(example1_definition(p)); }

// ---------------------------------------------------------------- planar PWL

SystemDefinition planar_pwl_definition(const PlanarPwlParams& p) {
  require_positive("beta_plus", p.beta_plus);
  require_positive("beta_minus", p.beta_minus);
  require_positive("c_plus", p.c_plus);
  require_positive("c_minus", p.c_minus);
  if (!std::isfinite(p.alpha_plus) || !std::isfinite(p.alpha_minus))
    throw ConfigError("alpha parameters must be finite");
  SystemDefinition d;
  d.name = "planar-pwl";
  d.parameters = {{"alpha_plus", p.alpha_plus}, {"alpha_minus", p.alpha_minus},
                  {"beta_plus", p.beta_plus},   {"beta_minus", p.beta_minus},
                  {"c_plus", p.c_plus},         {"c_minus", p.c_minus}};
  ModeDefinition plus;
  plus.id = "plus";
  plus.dim = 2;
  plus.state = {"x1", "x2"};
  plus.field = {"alpha_plus*x1 - beta_plus*x2", "beta_plus*x1 + alpha_plus*x2"};
  plus.domain = {"x1"};
  plus.region = make_box({0.0, -2.0}, {2.0, 2.0});
  ModeDefinition minus = plus;
  minus.id = "minus";
  minus.field = {"alpha_minus*x1 - beta_minus*x2", "beta_minus*x1 + alpha_minus*x2"};
  minus.domain = {"-x1"};
  minus.region = make_box({-2.0, -2.0}, {0.0, 2.0});
  d.modes = {plus, minus};
  d.transitions = {{"plus", "minus", "x1", {"x1", "c_plus*x2"}, "x2"},
                   {"minus", "plus", "-x1", {"x1", "c_minus*x2"}, "-x2"}};
  return d;
}

HybridSystemSpec make_planar_pwl(const PlanarPwlParams& p) {
  return compile(planar_pwl_definition(p));
}

// ---------------------------------------------------------------- traffic

double TrafficParams::demand1(double x) const { return q1 * (1.0 - std::exp(-x / theta)); }
double TrafficParams::demand2(double x) const { return q2 * (1.0 - std::exp(-x / theta)); }
double TrafficParams::supply2(double x) const { return w * (x_jam - x); }
double TrafficParams::d_demand1(double x) const { return q1 / theta * std::exp(-x / theta); }
double TrafficParams::d_demand2(double x) const { return q2 / theta * std::exp(-x / theta); }
double TrafficParams::d_supply2(double) const { return -w; }
double TrafficParams::inflow(double t) const {
  return u_mean + u_amp * std::sin(kTwoPi * t / u_period);
}

double traffic_critical_density(const TrafficParams& p) {
  double lo = 0.0;
  double hi = p.x_jam;
  // D2 - S2 is increasing, negative at 0 and positive at x_jam.
  for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (p.demand2(mid) - p.supply2(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double traffic_rho(const TrafficParams& p, double x1) {
  const double d1 = p.demand1(x1);
  return (d1 - p.supply2(p.x_bar)) / (d1 - p.demand2(p.x_bar));
}

void check_traffic(const TrafficParams& p) {
  require_positive("q1", p.q1);
  require_positive("q2", p.q2);
  require_positive("theta", p.theta);
  require_positive("w", p.w);
  require_positive("xjam", p.x_jam);
  require_positive("u_period", p.u_period);
  if (!std::isfinite(p.u_mean) || !std::isfinite(p.u_amp))
    throw ConfigError("inflow parameters must be finite");
  const double xcrit = traffic_critical_density(p);
  if (!(0.0 <= p.x_under && p.x_under < p.x_bar && p.x_bar < xcrit)) {
    std::ostringstream os;
    os << "traffic thresholds must satisfy 0 <= xunder < xbar < xcrit = " << xcrit
       << " (got xunder = " << p.x_under << ", xbar = " << p.x_bar << ")";
    throw ConfigError(os.str());
  }
}

TrafficParams traffic_params_from(const ParameterMap& m) {
  TrafficParams p;
  auto get = [&m](const char* k, double& v) {
    if (auto it = m.find(k); it != m.end()) v = it->second;
  };
  get("q1", p.q1);
  get("q2", p.q2);
  get("theta", p.theta);
  get("w", p.w);
  get("xjam", p.x_jam);
  get("xbar", p.x_bar);
  get("xunder", p.x_under);
  get("u_mean", p.u_mean);
  get("u_amp", p.u_amp);
  get("u_period", p.u_period);
  return p;
}

HybridSystemSpec make_traffic(const TrafficParams& p) {
  check_traffic(p);
  HybridSystemSpec sys;
  sys.name = "traffic";
  sys.parameters = {{"q1", p.q1},         {"q2", p.q2},         {"theta", p.theta},
                    {"w", p.w},           {"xjam", p.x_jam},    {"xbar", p.x_bar},
                    {"xunder", p.x_under}, {"u_mean", p.u_mean}, {"u_amp", p.u_amp},
                    {"u_period", p.u_period}, {"xcrit", traffic_critical_density(p)}};

  VectorFn uncon = [p](double t, const Vec& x) {
    const double d1 = p.demand1(x(0));
    return vec({p.inflow(t) - d1, d1 - p.demand2(x(1))});
  };
  MatrixFn j_uncon = [p](double, const Vec& x) {
    Mat J(2, 2);
    const double d1 = p.d_demand1(x(0));
    J << -d1, 0.0, d1, -p.d_demand2(x(1));
    return J;
  };
  VectorFn con = [p](double t, const Vec& x) {
    const double s2 = p.supply2(x(1));
    return vec({p.inflow(t) - s2, s2 - p.demand2(x(1))});
  };
  MatrixFn j_con = [p](double, const Vec& x) {
    Mat J(2, 2);
    const double s = p.d_supply2(x(1));
    J << 0.0, -s, 0.0, s - p.d_demand2(x(1));
    return J;
  };
  VectorFn dt_field = [p](double t, const Vec&) {
    return vec({p.u_amp * kTwoPi / p.u_period * std::cos(kTwoPi * t / p.u_period), 0.0});
  };

  auto base = [&](bool supply_free) -> PredicateFn {
    return [p, supply_free](double, const Vec& x) {
      const double tol = 1e-9;
      if (x(0) < -tol || x(1) < -tol || x(1) > p.x_jam + tol) return false;
      const double diff = p.demand1(x(0)) - p.supply2(x(1));
      return supply_free ? diff <= tol * (1.0 + std::abs(diff)) + tol
                         : diff >= -tol * (1.0 + std::abs(diff)) - tol;
    };
  };
  auto mode = [&](const std::string& id, bool supply_free, bool congested) {
    ModeSpec m;
    m.id = id;
    m.dim = 2;
    m.norm = NormSpec::L1(2);
    const bool constrained = !supply_free && congested;
    m.field = constrained ? con : uncon;
    m.jacobian = constrained ? j_con : j_uncon;
    m.time_partial = dt_field;
    PredicateFn b = base(supply_free);
    m.domain = [p, b, congested](double t, const Vec& x) {
      if (!b(t, x)) return false;
      return congested ? x(1) >= p.x_under - 1e-9 : x(1) <= p.x_bar + 1e-9;
    };
    m.region = make_box({0.0, 0.0}, {200.0, p.x_jam});
    m.state_names = {"x1", "x2"};
    return m;
  };
  sys.modes = {mode("SC", true, true), mode("SbarC", false, true), mode("SCbar", true, false),
               mode("SbarCbar", false, false)};

  // g = S2 - D1 (supply becomes limiting) and its negative.
  ScalarFn s_minus_d = [p](double, const Vec& x) { return p.supply2(x(1)) - p.demand1(x(0)); };
  VectorFn grad_s_minus_d = [p](double, const Vec& x) {
    return vec({-p.d_demand1(x(0)), p.d_supply2(x(1))});
  };
  ScalarFn d_minus_s = [p](double, const Vec& x) { return p.demand1(x(0)) - p.supply2(x(1)); };
  VectorFn grad_d_minus_s = [p](double, const Vec& x) {
    return vec({p.d_demand1(x(0)), -p.d_supply2(x(1))});
  };
  ScalarFn onset = [p](double, const Vec& x) { return p.x_bar - x(1); };
  VectorFn grad_onset = [](double, const Vec&) { return vec({0.0, -1.0}); };
  ScalarFn recovery = [p](double, const Vec& x) { return x(1) - p.x_under; };
  VectorFn grad_recovery = [](double, const Vec&) { return vec({0.0, 1.0}); };

  auto add = [&sys](const std::string& from, const std::string& to, ScalarFn g, VectorFn grad) {
    Transition tr;
    tr.guard.source = from;
    tr.guard.target = to;
    tr.guard.g = std::move(g);
    tr.guard.grad_x = std::move(grad);
    tr.reset = ResetSpec::Identity(from, to, 2);
    sys.transitions.push_back(std::move(tr));
  };
  add("SC", "SbarC", s_minus_d, grad_s_minus_d);
  add("SCbar", "SbarCbar", s_minus_d, grad_s_minus_d);
  add("SbarC", "SC", d_minus_s, grad_d_minus_s);
  add("SbarCbar", "SCbar", d_minus_s, grad_d_minus_s);
  add("SCbar", "SC", onset, grad_onset);
  add("SbarCbar", "SbarC", onset, grad_onset);
  add("SC", "SCbar", recovery, grad_recovery);
  return sys;
}

// ---------------------------------------------------------------- mechanics

double MechParams::input(double t) const { return u_bias + u_amp * std::sin(kTwoPi * u_freq * t); }
double MechParams::d_input(double t) const {
  return u_amp * kTwoPi * u_freq * std::cos(kTwoPi * u_freq * t);
}

HybridSystemSpec make_mech_1dof(const MechParams& p) {
  check_mech(p, kUsed1);
  HybridSystemSpec sys;
  sys.name = "mech-1dof";
  sys.parameters = mech_map(p, kUsed1);
  Mat A(2, 2);
  A << 0.0, 1.0, -p.kappa / p.m, -p.beta / p.m;
  ModeSpec free = linear_mode("free", A, vec({0.0, p.kappa / p.m}), p,
                              Mat(vec({p.kappa, p.m}).asDiagonal()), {"q", "dq"});
  free.domain = [](double, const Vec& x) { return x(0) >= -1e-9; };
  free.region = make_box({0.0, -2.0}, {2.0, 2.0});
  ModeSpec contact = linear_mode("contact", Mat(0, 0), Vec(0), p, Mat(0, 0), {});
  sys.modes = {free, contact};

  Transition td;
  td.guard = linear_guard("free", "contact", vec({1.0, 0.0}), 0.0, p);
  td.guard.enabled = [](double, const Vec& x) { return x(1) < -kTouchdownTol; };
  td.reset = linear_reset("free", "contact", Mat(0, 2));
  // Liftoff once the contact force -kappa u(t) stops pushing.
  Transition lo;
  lo.guard = linear_guard("contact", "free", Vec(0), 1.0, p);
  lo.reset = linear_reset("contact", "free", Mat::Zero(2, 0));
  sys.transitions = {td, lo};
  return sys;
}

HybridSystemSpec make_mech_2dof(const MechParams& p) {
  check_mech(p, kUsed2);
  HybridSystemSpec sys;
  sys.name = "mech-2dof";
  sys.parameters = mech_map(p, kUsed2);
  const double k = p.kappa, k1 = p.kappa_p, b = p.beta, b1 = p.beta_p, m = p.m, m1 = p.m_p;
  Mat A(4, 4);
  A << 0, 0, 1, 0,  //
      0, 0, 0, 1,   //
      -(k + k1) / m, k1 / m, -(b + b1) / m, b1 / m, k1 / m1, -k1 / m1, b1 / m1, -b1 / m1;
  Mat Kpos(2, 2);
  Kpos << k + k1, -k1, -k1, k1;
  ModeSpec free = linear_mode("free", A, vec({0.0, 0.0, k / m, 0.0}), p,
                              block_diag(Kpos, Mat(vec({m, m1}).asDiagonal())),
                              {"q", "q_p", "dq", "dq_p"});
  free.domain = [](double, const Vec& x) { return x(0) >= -1e-9; };
  free.region = make_box({0.0, -2.0, -2.0, -2.0}, {2.0, 2.0, 2.0, 2.0});
  Mat A1(2, 2);
  A1 << 0.0, 1.0, -k1 / m1, -b1 / m1;
  ModeSpec contact = linear_mode("contact", A1, vec({0.0, 0.0}), p,
                                 Mat(vec({k1, m1}).asDiagonal()), {"q_p", "dq_p"});
  contact.region = make_box({-2.0, -2.0}, {2.0, 2.0});
  sys.modes = {free, contact};

  Transition td;
  td.guard = linear_guard("free", "contact", vec({1.0, 0.0, 0.0, 0.0}), 0.0, p);
  td.guard.enabled = [](double, const Vec& x) { return x(2) < -kTouchdownTol; };
  Mat R(2, 4);
  R << 0, 1, 0, 0, 0, 0, 0, 1;
  td.reset = linear_reset("free", "contact", R);
  // The contact force kappa_p q_p + beta_p dq_p + kappa u pulls the first
  // mass off the constraint once it is nonnegative.
  Transition lo;
  lo.guard = linear_guard("contact", "free", vec({-k1, -b1}), k, p);
  Mat L(4, 2);
  L << 0, 0, 1, 0, 0, 0, 0, 1;
  lo.reset = linear_reset("contact", "free", L);
  sys.transitions = {td, lo};
  return sys;
}

HybridSystemSpec make_mech_soft(const MechParams& p) {
  check_mech(p, kUsedSoft);
  HybridSystemSpec sys;
  sys.name = "mech-soft";
  sys.parameters = mech_map(p, kUsedSoft);
  const double k = p.kappa, k2 = p.kappa_pp, b = p.beta, m = p.m;
  Mat A(2, 2);
  A << 0.0, 1.0, -k / m, -b / m;
  ModeSpec free = linear_mode("free", A, vec({0.0, k / m}), p, Mat(vec({k, m}).asDiagonal()),
                              {"q", "dq"});
  free.domain = [](double, const Vec& x) { return x(0) >= -1e-9; };
  free.region = make_box({0.0, -2.0}, {2.0, 2.0});
  Mat A1(2, 2);
  A1 << 0.0, 1.0, -(k + k2) / m, -b / m;
  ModeSpec contact = linear_mode("contact", A1, vec({0.0, k / m}), p,
                                 Mat(vec({k + k2, m}).asDiagonal()), {"q", "dq"});
  contact.domain = [](double, const Vec& x) { return x(0) <= 1e-9; };
  contact.region = make_box({-2.0, -2.0}, {0.0, 2.0});
  sys.modes = {free, contact};

  Transition td;
  td.guard = linear_guard("free", "contact", vec({1.0, 0.0}), 0.0, p);
  td.reset = ResetSpec::Identity("free", "contact", 2);
  Transition lo;
  lo.guard = linear_guard("contact", "free", vec({-1.0, 0.0}), 0.0, p);
  lo.reset = ResetSpec::Identity("contact", "free", 2);
  sys.transitions = {td, lo};
  return sys;
}

HybridSystemSpec make_mech_visco(const MechParams& p) {
  check_mech(p, kUsedVisco);
  HybridSystemSpec sys;
  sys.name = "mech-visco";
  sys.parameters = mech_map(p, kUsedVisco);
  const double k = p.kappa, k1 = p.kappa_p, k2 = p.kappa_pp, b = p.beta, b1 = p.beta_p;
  const double m = p.m, m1 = p.m_p;
  const double r = k2 / b1;
  // State (q, q_p, l, dq, dq_p); the series spring stretches by q_p - q - l.
  Mat A(5, 5);
  A << 0, 0, 0, 1, 0,  //
      0, 0, 0, 0, 1,   //
      -r, r, -r, 0, 0, //
      -(k + k1 + k2) / m, (k1 + k2) / m, -k2 / m, -b / m, 0,  //
      (k1 + k2) / m1, -(k1 + k2) / m1, k2 / m1, 0, 0;
  Mat Kpos(3, 3);
  Kpos << k + k1 + k2, -k1 - k2, k2,  //
      -k1 - k2, k1 + k2, -k2,         //
      k2, -k2, k2;
  ModeSpec free = linear_mode("free", A, vec({0.0, 0.0, 0.0, k / m, 0.0}), p,
                              block_diag(Kpos, Mat(vec({m, m1}).asDiagonal())),
                              {"q", "q_p", "l", "dq", "dq_p"});
  free.domain = [](double, const Vec& x) { return x(0) >= -1e-9; };
  free.region = make_box({0.0, -2.0, -2.0, -2.0, -2.0}, {2.0, 2.0, 2.0, 2.0, 2.0});
  // State (q_p, l, dq_p) with q = dq = 0.
  Mat A1(3, 3);
  A1 << 0, 0, 1,  //
      r, -r, 0,   //
      -(k1 + k2) / m1, k2 / m1, 0;
  Mat K1(2, 2);
  K1 << k1 + k2, -k2, -k2, k2;
  ModeSpec contact = linear_mode("contact", A1, vec({0.0, 0.0, 0.0}), p,
                                 block_diag(K1, Mat::Constant(1, 1, m1)), {"q_p", "l", "dq_p"});
  contact.region = make_box({-2.0, -2.0, -2.0}, {2.0, 2.0, 2.0});
  sys.modes = {free, contact};

  Transition td;
  td.guard = linear_guard("free", "contact", vec({1.0, 0.0, 0.0, 0.0, 0.0}), 0.0, p);
  td.guard.enabled = [](double, const Vec& x) { return x(3) < -kTouchdownTol; };
  Mat R = Mat::Zero(3, 5);
  R(0, 1) = 1.0;
  R(1, 2) = 1.0;
  R(2, 4) = 1.0;
  td.reset = linear_reset("free", "contact", R);
  Transition lo;
  lo.guard = linear_guard("contact", "free", vec({-(k1 + k2), k2, 0.0}), k, p);
  lo.reset = linear_reset("contact", "free", Mat(R.transpose()));
  sys.transitions = {td, lo};
  return sys;
}

double mechanical_energy(const HybridSystemSpec& sys, const HybridState& s) {
  const double n = vector_norm(s.x, sys.mode(s.mode).norm);
  return n * n;
}

// ---------------------------------------------------------------- small systems

SystemDefinition toy_moving_guard_definition() {
  SystemDefinition d;
  d.name = "toy-moving-guard";
  ModeDefinition one;
  one.id = "1";
  one.dim = 1;
  one.state = {"x"};
  one.field = {"0"};
  one.region = make_box({-2.0}, {2.0});
  ModeDefinition two = one;
  two.id = "2";
  d.modes = {one, two};
  d.transitions = {{"1", "2", "x - t", {"x"}, ""}};
  return d;
}

SystemDefinition dwell_scalar_definition(double gain, double rate) {
  require_positive("gain", gain);
  require_positive("rate", rate);
  SystemDefinition d;
  d.name = "dwell-scalar";
  d.parameters = {{"gain", gain}, {"rate", rate}, {"pi", std::numbers::pi}};
  ModeDefinition a;
  a.id = "A";
  a.dim = 1;
  a.state = {"x"};
  a.field = {"-rate*x"};
  a.region = make_box({-2.0}, {2.0});
  ModeDefinition b = a;
  b.id = "B";
  d.modes = {a, b};
  // Each guard is enabled on alternate half periods, so a reset never
  // re-triggers the opposite guard at the same instant.
  d.transitions = {{"A", "B", "cos(pi*t)", {"gain*x"}, "sin(pi*t)"},
                   {"B", "A", "-cos(pi*t)", {"gain*x"}, "-sin(pi*t)"}};
  return d;
}

SystemDefinition tv_reset_definition() {
  SystemDefinition d;
  d.name = "tv-reset";
  ModeDefinition a;
  a.id = "A";
  a.dim = 2;
  a.state = {"x1", "x2"};
  a.field = {"-1 - 0.1*x2^2", "0.5*x1 - 0.2*x2 + 0.3*sin(t)"};
  a.region = make_box({0.3, -1.0}, {2.0, 1.0});
  ModeDefinition b = a;
  b.id = "B";
  b.field = {"-0.5*x1 + 0.2*x2", "-x2 + cos(t)*x1"};
  b.region = make_box({-1.0, -1.0}, {1.0, 1.0});
  d.modes = {a, b};
  d.transitions = {
      {"A", "B", "x1 - (0.5 + 0.1*sin(t))", {"x1 + 0.2*sin(t)", "1.5*x2 + 0.3*cos(t)*x1"}, ""}};
  return d;
}

// ---------------------------------------------------------------- registry

std::vector<std::string> builtin_names() {
  return {"example1",  "planar-pwl", "traffic",          "mech-1dof",    "mech-2dof",
          "mech-soft", "mech-visco", "toy-moving-guard", "dwell-scalar", "tv-reset"};
}

ParameterMap builtin_parameters(const std::string& name) {
  if (name == "example1") {
    const Example1Params p;
    return {{"a_L", p.a_L}, {"b_L", p.b_L}, {"a_R", p.a_R}, {"b_R", p.b_R}};
  }
  if (name == "planar-pwl") {
    const PlanarPwlParams p;
    return {{"alpha_plus", p.alpha_plus}, {"alpha_minus", p.alpha_minus},
            {"beta_plus", p.beta_plus},   {"beta_minus", p.beta_minus},
            {"c_plus", p.c_plus},         {"c_minus", p.c_minus}};
  }
  if (name == "traffic") {
    const TrafficParams p;
    return {{"q1", p.q1},         {"q2", p.q2},         {"theta", p.theta},
            {"w", p.w},           {"xjam", p.x_jam},    {"xbar", p.x_bar},
            {"xunder", p.x_under}, {"u_mean", p.u_mean}, {"u_amp", p.u_amp},
            {"u_period", p.u_period}};
  }
  if (name == "mech-1dof") return mech_map(MechParams{}, kUsed1);
  if (name == "mech-2dof") return mech_map(MechParams{}, kUsed2);
  if (name == "mech-soft") return mech_map(MechParams{}, kUsedSoft);
  if (name == "mech-visco") return mech_map(MechParams{}, kUsedVisco);
  if (name == "dwell-scalar") return {{"gain", 2.0}, {"rate", 1.0}};
  if (name == "toy-moving-guard" || name == "tv-reset") return {};
  throw ConfigError("unknown built-in system '" + name + "'");
}

BuiltinSystem make_builtin(const std::string& name, const ParameterMap& overrides) {
  ParameterMap params = builtin_parameters(name);
  auto strip = [](std::string s) {
    std::erase(s, '_');
    return s;
  };
  for (const auto& [key, v] : overrides) {
    std::string k = key;
    if (!params.count(k)) {
      for (const auto& [kk, _] : params) {
        if (strip(kk) == strip(key)) k = kk;
      }
    }
    if (!params.count(k)) {
      std::string known;
      for (const auto& [kk, _] : params) known += (known.empty() ? "" : ", ") + kk;
      throw ConfigError("unknown parameter '" + k + "' for " + name +
                        (known.empty() ? " (it has none)" : " (known: " + known + ")"));
    }
    params[k] = v;
  }

  BuiltinSystem b;
  b.name = name;
  auto from_definition = [&b](SystemDefinition def) {
    b.system = compile(def);
    b.definition = std::move(def);
  };

  if (name == "example1") {
    from_definition(example1_definition(
        {params.at("a_L"), params.at("b_L"), params.at("a_R"), params.at("b_R")}));
    b.initial = {"R", vec({2.0, 1.0}), 0.0};
    b.t_end = 5.0;
  } else if (name == "planar-pwl") {
    from_definition(planar_pwl_definition({params.at("alpha_plus"), params.at("alpha_minus"),
                                           params.at("beta_plus"), params.at("beta_minus"),
                                           params.at("c_plus"), params.at("c_minus")}));
    b.initial = {"plus", vec({1.0, 0.0}), 0.0};
    b.t_end = 20.0;
  } else if (name == "traffic") {
    const TrafficParams p = traffic_params_from(params);
    b.system = make_traffic(p);
    b.initial = {"SCbar", vec({20.0, 20.0}), 0.0};
    b.t_end = 20.0 * p.u_period;
    b.plan.grid_per_axis = 101;
    b.plan.guard_samples = 200;
  } else if (name == "mech-1dof" || name == "mech-2dof" || name == "mech-soft" ||
             name == "mech-visco") {
    const MechParams p = mech_from(params);
    if (name == "mech-1dof") {
      b.system = make_mech_1dof(p);
      b.initial = {"free", vec({1.0, 0.0}), 0.0};
    } else if (name == "mech-2dof") {
      b.system = make_mech_2dof(p);
      b.initial = {"free", vec({1.0, 1.0, 0.0, 0.0}), 0.0};
    } else if (name == "mech-soft") {
      b.system = make_mech_soft(p);
      b.initial = {"free", vec({1.0, 0.0}), 0.0};
    } else {
      b.system = make_mech_visco(p);
      b.initial = {"free", vec({1.0, 1.0, 0.0, 0.0, 0.0}), 0.0};
    }
    b.t_end = 10.0;
  } else if (name == "toy-moving-guard") {
    from_definition(toy_moving_guard_definition());
    b.initial = {"1", vec({1.0}), 0.0};
    b.t_end = 2.0;
  } else if (name == "dwell-scalar") {
    from_definition(dwell_scalar_definition(params.at("gain"), params.at("rate")));
    b.initial = {"A", vec({1.0}), 0.0};
    b.t_end = 4.0;
    // D_x g = 0 here, so guard points are listed instead of ray-sampled.
    for (double t : {0.5, 2.5}) {
      for (int i = 0; i <= 8; ++i) b.plan.guard_points[{"A", "B"}].push_back({t, vec({-2.0 + 0.5 * i})});
    }
    for (double t : {1.5, 3.5}) {
      for (int i = 0; i <= 8; ++i) b.plan.guard_points[{"B", "A"}].push_back({t, vec({-2.0 + 0.5 * i})});
    }
  } else if (name == "tv-reset") {
    from_definition(tv_reset_definition());
    b.initial = {"A", vec({1.0, 0.5}), 0.0};
    b.t_end = 3.0;
    b.plan.times = {0.0, 0.7, 1.9};
  }
  b.parameters = b.system.parameters;
  for (const auto& [k, v] : params) b.parameters.emplace(k, v);
  b.system.parameters = b.parameters;
  return b;
}

}  // namespace hycon
