#include "hycon/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hycon/contraction.h"
#include "hycon/errors.h"
#include "hycon/expression.h"
#include "hycon/intrinsic_distance.h"
#include "hycon/io.h"
#include "hycon/simulator.h"
#include "hycon/system_definition.h"
#include "hycon/systems_library.h"
#include "hycon/variational.h"

namespace hycon {

using nlohmann::json;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Options {
  std::string command;
  std::string system;
  std::string config;
  std::string out_dir{"."};
  unsigned seed{1};
  double tol{1e-10};
  std::string method{"dopri5"};
  // simulate
  std::string x0;
  double t0{0.0};
  double t_end{kUnset};
  double sample_dt{0.0};
  // certify / saltation
  int draws{-1};
  int flow_samples{-1};
  int grid{-1};
  std::vector<double> times;
  double c_target{0.0};
  double k_tol{1e-9};
  double tau_lower{kUnset};
  double tau_upper{kUnset};
  bool expect_contractive{false};
  bool no_refine{false};
  std::string at;
  std::string transition;
  // distance
  std::string a;
  std::string b;
  double time{0.0};
  int depth{3};
  // experiment
  int pairs{10};
  double eps{0.05};
  bool straddle{false};
  std::string distance_kind{"intrinsic"};
  int time_grid{101};
  double c{kUnset};
  double K{kUnset};
  // envelope
  double d0{1.0};
  double s{0.0};
  // parameter overrides from extra --name value pairs
  ParameterMap overrides;
};

struct LoadedSystem {
  HybridSystemSpec sys;
  std::optional<HybridState> initial;
  double t_end{10.0};
  SamplingPlan plan;
  std::string label;
  json description;
};

double number_or(double v, double fallback) { return std::isnan(v) ? fallback : v; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

// Numeric value or constant expression of the system parameters.
double eval_value(const std::string& text, const HybridSystemSpec& sys, double t) {
  try {
    const Expression e = Expression::parse(text).bind({}, sys.parameters);
    return e.eval(t, Vec(0));
  } catch (const ConfigError& ex) {
    throw ConfigError("cannot evaluate '" + text + "': " + ex.what());
  }
}

// "mode:v1,v2,..."
HybridState parse_state(const std::string& text, const HybridSystemSpec& sys, double t) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("state '" + text + "' must be mode:v1,v2,...");
  HybridState s;
  s.mode = trim(text.substr(0, colon));
  s.t = t;
  const ModeSpec* m = sys.find_mode(s.mode);
  if (!m) throw ConfigError("unknown mode '" + s.mode.name + "'");
  const std::string rest = trim(text.substr(colon + 1));
  const auto parts = rest.empty() ? std::vector<std::string>{} : split(rest, ',');
  if (static_cast<int>(parts.size()) != m->dim) {
    throw ConfigError("mode " + s.mode.name + " has dimension " + std::to_string(m->dim) +
                      " but " + std::to_string(parts.size()) + " values were given");
  }
  s.x.resize(m->dim);
  for (int i = 0; i < m->dim; ++i) s.x(i) = eval_value(parts[static_cast<std::size_t>(i)], sys, t);
  return s;
}

std::vector<std::string> state_names(const ModeSpec& m) {
  if (!m.state_names.empty()) return m.state_names;
  std::vector<std::string> names;
  for (int i = 0; i < m.dim; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

// "x1=2,x2=xbar": assignments to the state names of some mode.
struct PointSpec {
  std::vector<std::pair<std::string, std::string>> assignments;
};

PointSpec parse_point(const std::string& text) {
  PointSpec p;
  for (const auto& part : split(text, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("expected name=value in '" + part + "'");
    p.assignments.emplace_back(trim(part.substr(0, eq)), trim(part.substr(eq + 1)));
  }
  return p;
}

std::optional<Vec> point_in_mode(const PointSpec& p, const ModeSpec& m, const HybridSystemSpec& sys,
                                 double t) {
  const auto names = state_names(m);
  if (names.size() != p.assignments.size()) return std::nullopt;
  Vec x(m.dim);
  for (std::size_t i = 0; i < names.size(); ++i) {
    bool found = false;
    for (const auto& [k, v] : p.assignments) {
      if (k == names[i]) {
        x(static_cast<Eigen::Index>(i)) = eval_value(v, sys, t);
        found = true;
      }
    }
    if (!found) return std::nullopt;
  }
  return x;
}

TransitionKey parse_key(const std::string& text) {
  const auto arrow = text.find("->");
  if (arrow == std::string::npos) throw ConfigError("transition must be source->target");
  return {trim(text.substr(0, arrow)), trim(text.substr(arrow + 2))};
}

ParameterMap parse_overrides(const std::vector<std::string>& extras) {
  ParameterMap out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + key + "'");
    key = key.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("parameter --" + key + " needs a value");
      value = extras[++i];
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      out[key] = v;
    } catch (const std::exception&) {
      throw ConfigError("parameter --" + key + " has non-numeric value '" + value + "'");
    }
  }
  return out;
}

LoadedSystem load_system(const Options& o) {
  if (o.system.empty()) throw ConfigError("--system is required");
  LoadedSystem out;
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), o.system) != names.end()) {
    BuiltinSystem b = make_builtin(o.system, o.overrides);
    out.sys = std::move(b.system);
    out.initial = b.initial;
    out.t_end = b.t_end;
    out.plan = b.plan;
    out.label = o.system;
    out.description = {{"builtin", o.system}, {"parameters", b.parameters}};
    if (b.definition) out.description["definition"] = definition_to_json(*b.definition);
    return out;
  }
  if (!std::filesystem::exists(o.system)) {
    throw ConfigError("system '" + o.system + "' is neither a built-in nor an existing file");
  }
  SystemDefinition def = load_definition(o.system);
  for (const auto& [k, v] : o.overrides) {
    if (!def.parameters.count(k)) throw ConfigError("unknown parameter '" + k + "' for " + o.system);
    def.parameters[k] = v;
  }
  out.sys = compile(def);
  out.sys.parameters = def.parameters;
  out.label = def.name.empty() ? o.system : def.name;
  out.description = {{"file", o.system}, {"definition", definition_to_json(def)}};
  return out;
}

SimulationOptions simulation_options(const Options& o) {
  SimulationOptions s;
  if (o.method == "rk4") {
    s.method = IntegrationMethod::kRk4;
  } else if (o.method != "dopri5") {
    throw ConfigError("--method must be dopri5 or rk4");
  }
  s.integrator.rtol = o.tol;
  s.integrator.atol = o.tol;
  s.guard_tol = o.tol;
  return s;
}

json resolved_config(const Options& o, const LoadedSystem& ls) {
  json j = {{"command", o.command},
            {"system", ls.description},
            {"seed", o.seed},
            {"tol", o.tol},
            {"method", o.method},
            {"out_dir", o.out_dir}};
  auto put = [&j](const char* k, double v) {
    if (!std::isnan(v)) j[k] = std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf");
  };
  if (o.command == "simulate") {
    j["x0"] = o.x0;
    put("t0", o.t0);
    put("t_end", number_or(o.t_end, ls.t_end));
    put("sample_dt", o.sample_dt);
  } else if (o.command == "certify" || o.command == "saltation") {
    j["draws"] = o.draws;
    j["flow_samples"] = o.flow_samples;
    j["grid"] = o.grid;
    j["times"] = o.times;
    put("c_target", o.c_target);
    put("k_tol", o.k_tol);
    put("tau_lower", o.tau_lower);
    put("tau_upper", o.tau_upper);
    j["expect_contractive"] = o.expect_contractive;
    j["refine"] = !o.no_refine;
    j["at"] = o.at;
    j["transition"] = o.transition;
    put("time", o.time);
  } else if (o.command == "distance") {
    j["a"] = o.a;
    j["b"] = o.b;
    put("time", o.time);
    j["depth"] = o.depth;
  } else if (o.command == "experiment") {
    j["pairs"] = o.pairs;
    put("eps", o.eps);
    j["straddle"] = o.straddle;
    j["distance"] = o.distance_kind;
    j["grid"] = o.time_grid;
    put("t_end", number_or(o.t_end, ls.t_end));
    put("c", o.c);
    put("K", o.K);
    put("tau_lower", o.tau_lower);
    put("tau_upper", o.tau_upper);
  }
  return j;
}

std::string out_path(const Options& o, const std::string& file) {
  return (std::filesystem::path(o.out_dir) / file).string();
}

SamplingPlan sampling_plan(const Options& o, const LoadedSystem& ls) {
  SamplingPlan plan = ls.plan;
  plan.seed = o.seed;
  if (o.draws >= 0) plan.guard_samples = o.draws;
  if (o.flow_samples >= 0) plan.flow_samples = o.flow_samples;
  if (o.grid >= 0) plan.grid_per_axis = o.grid;
  if (!o.times.empty()) plan.times = o.times;
  if (o.no_refine) plan.refine = false;
  return plan;
}

CertifyOptions certify_options(const Options& o) {
  CertifyOptions c;
  c.c_target = o.c_target;
  c.k_tol = o.k_tol;
  if (!std::isnan(o.tau_lower)) c.tau_lower = o.tau_lower;
  if (!std::isnan(o.tau_upper)) c.tau_upper = o.tau_upper;
  return c;
}

// ---------------------------------------------------------------- commands

int cmd_simulate(const Options& o, std::ostream& out) {
  const LoadedSystem ls = load_system(o);
  HybridState init;
  if (!o.x0.empty()) {
    init = parse_state(o.x0, ls.sys, o.t0);
  } else if (ls.initial) {
    init = *ls.initial;
    init.t = o.t0;
  } else {
    throw ConfigError("--x0 mode:v1,v2,... is required for this system");
  }
  const double t_end = number_or(o.t_end, ls.t_end);
  if (t_end < init.t) throw ConfigError("--t-end is before the initial time");
  const HybridTrajectory traj = simulate(ls.sys, init, t_end, simulation_options(o));

  write_text_file(out_path(o, "trajectory.csv"),
                  trajectory_csv(ls.sys, traj, csv_header_line(ls.label, o.seed), o.sample_dt));
  json ev = events_json(traj);
  ev["config"] = resolved_config(o, ls);
  write_text_file(out_path(o, "events.json"), ev.dump(2) + "\n");

  out << "status=" << to_string(traj.status) << " events=" << traj.events.size()
      << " t_final=" << traj.final_state.t << " mode=" << traj.final_state.mode.name << "\n";
  if (!traj.message.empty()) out << traj.message << "\n";
  switch (traj.status) {
    case TrajectoryStatus::kCompleted:
      return kExitOk;
    case TrajectoryStatus::kZenoCutoff:
      return kExitZeno;
    case TrajectoryStatus::kEvaluatorError:
      return kExitRuntime;
  }
  return kExitRuntime;
}

int cmd_certify(const Options& o, std::ostream& out) {
  const LoadedSystem ls = load_system(o);
  const ContractionCertificate cert =
      certify(ls.sys, sampling_plan(o, ls), certify_options(o));
  json j = to_json(cert);
  j["config"] = resolved_config(o, ls);
  write_text_file(out_path(o, "certificate.json"), j.dump(2) + "\n");
  write_text_file(out_path(o, "certificate.csv"),
                  certificate_csv(cert, csv_header_line(ls.label, o.seed)));
  out << "c_hat=" << cert.flow.c_hat << " K_hat=" << cert.resets.K_hat
      << " verdict=" << to_string(cert.verdict);
  if (cert.envelope) out << " contractive_flag=" << cert.envelope->contractive_flag();
  out << "\n";
  if (cert.verdict == Verdict::kViolated && !cert.resets.witness.location.empty()) {
    out << "witness " << cert.resets.witness.location << " t=" << cert.resets.witness.t
        << " norm=" << cert.resets.witness.value << "\n";
  }
  if (o.expect_contractive && cert.verdict == Verdict::kViolated) return kExitViolated;
  return kExitOk;
}

int cmd_saltation(const Options& o, std::ostream& out) {
  const LoadedSystem ls = load_system(o);
  const double t = o.time;
  std::vector<const Transition*> transitions;
  if (!o.transition.empty()) {
    transitions.push_back(&ls.sys.transition(parse_key(o.transition)));
  } else {
    for (const auto& tr : ls.sys.transitions) transitions.push_back(&tr);
  }

  const bool traffic = ls.description.contains("builtin") && ls.description["builtin"] == "traffic";
  const TrafficParams tp = traffic ? traffic_params_from(ls.sys.parameters) : TrafficParams{};

  json records = json::array();
  auto record = [&](const Transition& tr, double tt, const Vec& x) {
    json r;
    const ModeSpec& src = ls.sys.mode(tr.guard.source);
    r["transition"] = tr.key().to_string();
    r["in_source_domain"] = in_domain(src, tt, x);
    r["enabled"] = guard_enabled(tr.guard, tt, x);
    try {
      const SaltationRecord rec = saltation(ls.sys, tr.key(), tt, x);
      r["record"] = to_json(rec);
      out << tr.key().to_string() << " " << format_point(tt, x)
          << " norm=" << rec.induced_norm << "\n";
      out << rec.xi << "\n";
    } catch (const Error& e) {
      r["error"] = e.what();
      out << tr.key().to_string() << ": " << e.what() << "\n";
    }
    if (traffic && tr.key() == TransitionKey{"SbarCbar", "SbarC"}) {
      const double rho = traffic_rho(tp, x(0));
      r["rho"] = rho;
      out << "rho=" << rho << "\n";
    }
    records.push_back(r);
  };

  if (!o.at.empty()) {
    const PointSpec p = parse_point(o.at);
    for (const Transition* tr : transitions) {
      const ModeSpec& src = ls.sys.mode(tr->guard.source);
      const auto x = point_in_mode(p, src, ls.sys, t);
      if (!x) continue;
      const double g = eval_guard(tr->guard, t, *x);
      if (std::abs(g) > 1e-8 * (1.0 + x->lpNorm<Eigen::Infinity>())) continue;
      record(*tr, t, *x);
    }
    if (records.empty()) throw ConfigError("no transition has " + o.at + " on its guard");
  } else {
    SamplingPlan plan = sampling_plan(o, ls);
    if (o.draws < 0) plan.guard_samples = 8;
    for (const Transition* tr : transitions) {
      for (const auto& gp : sample_guard(ls.sys, tr->key(), plan)) record(*tr, gp.t, gp.x);
    }
  }
  json j = {{"records", records}, {"config", resolved_config(o, ls)}};
  write_text_file(out_path(o, "saltation.json"), j.dump(2) + "\n");
  return kExitOk;
}

int cmd_distance(const Options& o, std::ostream& out) {
  const LoadedSystem ls = load_system(o);
  if (o.a.empty() || o.b.empty()) throw ConfigError("--a and --b are required");
  const HybridState a = parse_state(o.a, ls.sys, o.time);
  const HybridState b = parse_state(o.b, ls.sys, o.time);
  DistanceOptions dopt;
  dopt.depth = o.depth;
  dopt.seed = o.seed;
  const DistanceEstimate d = distance(ls.sys, a, b, o.time, dopt);
  json j = to_json(d);
  j["config"] = resolved_config(o, ls);
  write_text_file(out_path(o, "distance.json"), j.dump(2) + "\n");
  out << "distance=" << d.value << " exactness=" << to_string(d.exactness) << "\n";
  return kExitOk;
}

std::optional<Vec> sample_in_region(const ModeSpec& m, double t, std::mt19937_64& rng) {
  if (!m.region) return std::nullopt;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int tries = 0; tries < 1000; ++tries) {
    Vec x(m.dim);
    for (int i = 0; i < m.dim; ++i) x(i) = m.region->lo(i) + u(rng) * (m.region->hi(i) - m.region->lo(i));
    if (in_domain(m, t, x)) return x;
  }
  return std::nullopt;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  const LoadedSystem ls = load_system(o);
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::pair<HybridState, HybridState>> inits;
  const double t0 = o.t0;
  std::vector<const ModeSpec*> modes;
  for (const auto& m : ls.sys.modes)
    if (m.dim > 0 && m.region) modes.push_back(&m);
  if (modes.empty()) throw ConfigError("no mode has a sampling region");
  for (int attempt = 0; static_cast<int>(inits.size()) < o.pairs && attempt < 100000; ++attempt) {
    const ModeSpec& m = *modes[rng() % modes.size()];
    const auto x = sample_in_region(m, t0, rng);
    if (!x) continue;
    Vec dir(m.dim);
    for (int i = 0; i < m.dim; ++i) dir(i) = normal(rng);
    const Vec z = *x + o.eps * dir / dir.norm();
    const ModeSpec* target = nullptr;
    if (!o.straddle && in_domain(m, t0, z)) target = &m;
    for (const auto& other : ls.sys.modes) {
      if (target) break;
      if (&other != &m && other.dim == m.dim && in_domain(other, t0, z)) target = &other;
    }
    if (!target) continue;
    inits.push_back({{m.id, *x, t0}, {target->id, z, t0}});
  }
  if (static_cast<int>(inits.size()) < o.pairs) throw ConfigError("could not generate enough pairs");

  DwellEnvelope env;
  if (std::isnan(o.c) || std::isnan(o.K)) {
    SamplingPlan plan = sampling_plan(o, ls);
    const ContractionCertificate cert = certify(ls.sys, plan, certify_options(o));
    env.c = cert.flow.c_hat;
    env.K = std::max(1.0, cert.resets.K_hat);
  }
  if (!std::isnan(o.c)) env.c = o.c;
  if (!std::isnan(o.K)) env.K = o.K;
  if (!std::isnan(o.tau_lower)) env.tau_lower = o.tau_lower;
  if (!std::isnan(o.tau_upper)) env.tau_upper = o.tau_upper;

  ExperimentOptions eo;
  eo.grid = o.time_grid;
  if (o.distance_kind == "ambient") {
    eo.distance = DistanceKind::kAmbient;
  } else if (o.distance_kind != "intrinsic") {
    throw ConfigError("--distance must be intrinsic or ambient");
  }
  eo.distance_options.seed = o.seed;
  eo.simulation = simulation_options(o);
  const double t_end = number_or(o.t_end, ls.t_end);
  const ExperimentReport rep = pairwise_contraction_experiment(ls.sys, inits, t_end, env, eo);

  write_text_file(out_path(o, "experiment.csv"),
                  experiment_csv(rep, csv_header_line(ls.label, o.seed)));
  json pairs = json::array();
  for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
    pairs.push_back({{"a", to_json(inits[i].first)},
                     {"b", to_json(inits[i].second)},
                     {"max_ratio", rep.pairs[i].max_ratio},
                     {"max_increase", rep.pairs[i].max_increase},
                     {"error", rep.pairs[i].error}});
  }
  json j = {{"max_ratio", rep.max_ratio},
            {"envelope",
             {{"c", env.c}, {"K", env.K}, {"tau_lower", env.tau_lower},
              {"tau_upper", std::isfinite(env.tau_upper) ? json(env.tau_upper) : json("inf")}}},
            {"pairs", pairs},
            {"config", resolved_config(o, ls)}};
  write_text_file(out_path(o, "experiment.json"), j.dump(2) + "\n");
  out << "max_ratio=" << rep.max_ratio << " pairs=" << rep.pairs.size() << "\n";
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const LoadedSystem ls = load_system(o);
  ValidationOptions vo;
  vo.seed = o.seed;
  const auto diags = validate(ls.sys, vo);
  json arr = json::array();
  for (const auto& d : diags) {
    arr.push_back({{"kind", d.kind}, {"location", d.location}, {"message", d.message}});
    out << d.kind << " " << d.location << ": " << d.message << "\n";
  }
  json j = {{"diagnostics", arr}, {"config", resolved_config(o, ls)}};
  write_text_file(out_path(o, "validate.json"), j.dump(2) + "\n");
  out << diags.size() << " diagnostic(s)\n";
  return diags.empty() ? kExitOk : kExitConfig;
}

int cmd_envelope(const Options& o, std::ostream& out) {
  if (std::isnan(o.c) || std::isnan(o.K)) throw ConfigError("--c and --K are required");
  DwellEnvelope env;
  env.c = o.c;
  env.K = o.K;
  env.tau_lower = number_or(o.tau_lower, 0.0);
  env.tau_upper = number_or(o.tau_upper, std::numeric_limits<double>::infinity());
  const double t_end = number_or(o.t_end, 10.0);
  const int n = std::max(2, o.time_grid);
  std::ostringstream csv;
  csv << csv_header_line("envelope", o.seed) << "t,bound\n";
  for (int i = 0; i < n; ++i) {
    const double t = o.s + (t_end - o.s) * i / (n - 1);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, envelope_bound(env, o.d0, o.s, t));
    csv << buf;
  }
  write_text_file(out_path(o, "envelope.csv"), csv.str());
  out << "contractive_flag=" << env.contractive_flag() << "\n";
  return kExitOk;
}

// Config file entries become command-line arguments placed before the
// user's own, so explicit flags win.
std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [k, v] : j.items()) {
    if (k == "parameters") {
      for (const auto& [pk, pv] : v.items()) {
        args.push_back("--" + pk);
        args.push_back(pv.dump());
      }
      continue;
    }
    std::string flag = "--" + k;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_array()) {
      for (const auto& e : v) {
        args.push_back(flag);
        args.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      }
    } else {
      args.push_back(flag);
      args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  return args;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--system", o.system, "Built-in name or JSON system definition path");
  sub->add_option("--config", o.config, "JSON file with option values");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--out-dir", o.out_dir, "Output directory");
  sub->add_option("--tol", o.tol, "Integrator and event tolerance");
  sub->add_option("--method", o.method, "dopri5 or rk4");
  sub->allow_extras();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  // Splice config file arguments in right after the command name.
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      try {
        const auto extra = config_arguments(args[i + 1]);
        args.insert(args.begin() + 1, extra.begin(), extra.end());
      } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      break;
    }
  }

  Options o;
  CLI::App app{"Hybrid-system contraction toolkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Simulate one trajectory");
  add_common(sim, o);
  sim->add_option("--x0", o.x0, "Initial state mode:v1,v2,...");
  sim->add_option("--t0", o.t0, "Initial time");
  sim->add_option("--t-end", o.t_end, "Final time");
  sim->add_option("--sample-dt", o.sample_dt, "Uniform output spacing (0: integrator steps)");

  auto* cert = app.add_subcommand("certify", "Sampled contraction certificate");
  add_common(cert, o);
  auto add_sampling = [&o](CLI::App* s) {
    s->add_option("--draws", o.draws, "Guard samples per transition and time");
    s->add_option("--flow-samples", o.flow_samples, "Flow samples per mode and time");
    s->add_option("--grid", o.grid, "Tensor grid points per axis");
    s->add_option("--times", o.times, "Sample times")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s->add_flag("--no-refine", o.no_refine, "Skip local ascent");
  };
  add_sampling(cert);
  cert->add_option("--c-target", o.c_target, "Flow rate target");
  cert->add_option("--k-tol", o.k_tol, "Tolerance on K_hat <= 1");
  cert->add_option("--tau-lower", o.tau_lower, "Lower dwell-time bound");
  cert->add_option("--tau-upper", o.tau_upper, "Upper dwell-time bound");
  cert->add_flag("--expect-contractive", o.expect_contractive, "Exit 2 on a violated verdict");

  auto* salt = app.add_subcommand("saltation", "Saltation matrices at guard points");
  add_common(salt, o);
  add_sampling(salt);
  salt->add_option("--at", o.at, "Point name=value,... (values may use parameters)");
  salt->add_option("--transition", o.transition, "Restrict to source->target");
  salt->add_option("--time", o.time, "Time of the point");

  auto* dist = app.add_subcommand("distance", "Intrinsic distance estimate");
  add_common(dist, o);
  dist->add_option("--a", o.a, "First state mode:v1,...")->required();
  dist->add_option("--b", o.b, "Second state mode:v1,...")->required();
  dist->add_option("--time", o.time, "Evaluation time");
  dist->add_option("--depth", o.depth, "Maximum jumps per path");

  auto* exp = app.add_subcommand("experiment", "Pairwise contraction experiment");
  add_common(exp, o);
  add_sampling(exp);
  exp->add_option("--pairs", o.pairs, "Number of trajectory pairs");
  exp->add_option("--eps", o.eps, "Initial separation");
  exp->add_flag("--straddle", o.straddle, "Place the two states in different modes");
  exp->add_option("--distance", o.distance_kind, "intrinsic or ambient");
  exp->add_option("--time-grid", o.time_grid, "Time samples per pair");
  exp->add_option("--t0", o.t0, "Initial time");
  exp->add_option("--t-end", o.t_end, "Final time");
  exp->add_option("--c", o.c, "Envelope rate (default: certified c_hat)");
  exp->add_option("--K", o.K, "Envelope reset gain (default: certified K_hat, at least 1)");
  exp->add_option("--tau-lower", o.tau_lower, "Lower dwell-time bound");
  exp->add_option("--tau-upper", o.tau_upper, "Upper dwell-time bound");

  auto* val = app.add_subcommand("validate", "Structural and sampled checks");
  add_common(val, o);

  auto* env = app.add_subcommand("envelope", "Dwell-time envelope table");
  env->add_option("--c", o.c, "Flow rate bound")->required();
  env->add_option("--K", o.K, "Saltation norm bound")->required();
  env->add_option("--tau-lower", o.tau_lower, "Lower dwell-time bound");
  env->add_option("--tau-upper", o.tau_upper, "Upper dwell-time bound");
  env->add_option("--d0", o.d0, "Initial distance");
  env->add_option("--s", o.s, "Initial time");
  env->add_option("--t-end", o.t_end, "Final time");
  env->add_option("--time-grid", o.time_grid, "Number of rows");
  env->add_option("--seed", o.seed, "Random seed");
  env->add_option("--out-dir", o.out_dir, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    o.command = sub->get_name();
    o.overrides = parse_overrides(sub->remaining());
    if (o.command == "simulate") return cmd_simulate(o, out);
    if (o.command == "certify") return cmd_certify(o, out);
    if (o.command == "saltation") return cmd_saltation(o, out);
    if (o.command == "distance") return cmd_distance(o, out);
    if (o.command == "experiment") return cmd_experiment(o, out);
    if (o.command == "validate") return cmd_validate(o, out);
    if (o.command == "envelope") return cmd_envelope(o, out);
    err << "error: unknown command\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GrazingError& e) {
    err << "grazing: " << e.what() << "\n";
    return kExitGrazing;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace hycon
