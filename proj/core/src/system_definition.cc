#include "hycon/system_definition.h"

#include <fstream>
#include <sstream>

#include "hycon/errors.h"
#include "hycon/expression.h"

namespace hycon {
namespace {

using nlohmann::json;

std::string weight_entry(const json& v) {
  if (v.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  if (v.is_string()) return v.get<std::string>();
  throw ConfigError("weight entries must be numbers or expression strings");
}

std::vector<std::string> default_names(int dim) {
  std::vector<std::string> names;
  for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

std::vector<Expression> bind_list(const std::vector<std::string>& texts,
                                  const std::vector<std::string>& names,
                                  const std::map<std::string, double>& params,
                                  const std::string& where) {
  std::vector<Expression> out;
  for (const auto& s : texts) {
    try {
      out.push_back(Expression::parse(s).bind(names, params));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return out;
}

Expression bind_one(const std::string& text, const std::vector<std::string>& names,
                    const std::map<std::string, double>& params, const std::string& where) {
  return bind_list({text}, names, params, where).front();
}

MatrixFn jacobian_fn(const std::vector<Expression>& exprs, int cols) {
  std::vector<std::vector<Expression>> d(exprs.size());
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    for (int j = 0; j < cols; ++j) d[i].push_back(exprs[i].derivative(j));
  }
  return [d, cols](double t, const Vec& x) {
    Mat J(static_cast<Eigen::Index>(d.size()), cols);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (int j = 0; j < cols; ++j) J(static_cast<Eigen::Index>(i), j) = d[i][j].eval(t, x);
    }
    return J;
  };
}

}  // namespace

SystemDefinition definition_from_json(const json& j) {
  SystemDefinition def;
  try {
    def.name = j.value("name", std::string("custom"));
    if (j.contains("parameters")) {
      for (const auto& [k, v] : j.at("parameters").items()) def.parameters[k] = v.get<double>();
    }
    def.max_events_per_unit_time = j.value("max_events_per_unit_time", 1000);
    for (const auto& jm : j.at("modes")) {
      ModeDefinition m;
      m.id = jm.at("id").get<std::string>();
      m.dim = jm.at("dim").get<int>();
      if (jm.contains("state")) m.state = jm.at("state").get<std::vector<std::string>>();
      if (jm.contains("norm")) {
        const auto& jn = jm.at("norm");
        m.norm_kind = jn.at("kind").get<std::string>();
        if (jn.contains("weight")) {
          for (const auto& row : jn.at("weight")) {
            std::vector<std::string> r;
            for (const auto& v : row) r.push_back(weight_entry(v));
            m.weight.push_back(std::move(r));
          }
        }
      }
      if (jm.contains("field")) m.field = jm.at("field").get<std::vector<std::string>>();
      if (jm.contains("domain")) m.domain = jm.at("domain").get<std::vector<std::string>>();
      if (jm.contains("region")) {
        const auto lo = jm.at("region").at("lo").get<std::vector<double>>();
        const auto hi = jm.at("region").at("hi").get<std::vector<double>>();
        Box b;
        b.lo = Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size()));
        b.hi = Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()));
        m.region = b;
      }
      def.modes.push_back(std::move(m));
    }
    if (j.contains("transitions")) {
      for (const auto& jt : j.at("transitions")) {
        TransitionDefinition t;
        t.from = jt.at("from").get<std::string>();
        t.to = jt.at("to").get<std::string>();
        t.guard = jt.at("guard").get<std::string>();
        t.reset = jt.at("reset").get<std::vector<std::string>>();
        t.enabled = jt.value("enabled", std::string());
        def.transitions.push_back(std::move(t));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("system definition: ") + e.what());
  }
  return def;
}

json definition_to_json(const SystemDefinition& def) {
  json j;
  j["name"] = def.name;
  j["parameters"] = def.parameters;
  j["max_events_per_unit_time"] = def.max_events_per_unit_time;
  j["modes"] = json::array();
  for (const auto& m : def.modes) {
    json jm;
    jm["id"] = m.id;
    jm["dim"] = m.dim;
    if (!m.state.empty()) jm["state"] = m.state;
    jm["norm"]["kind"] = m.norm_kind;
    if (!m.weight.empty()) jm["norm"]["weight"] = m.weight;
    jm["field"] = m.field;
    if (!m.domain.empty()) jm["domain"] = m.domain;
    if (m.region) {
      jm["region"]["lo"] = std::vector<double>(m.region->lo.data(),
                                               m.region->lo.data() + m.region->lo.size());
      jm["region"]["hi"] = std::vector<double>(m.region->hi.data(),
                                               m.region->hi.data() + m.region->hi.size());
    }
    j["modes"].push_back(jm);
  }
  j["transitions"] = json::array();
  for (const auto& t : def.transitions) {
    json jt;
    jt["from"] = t.from;
    jt["to"] = t.to;
    jt["guard"] = t.guard;
    jt["reset"] = t.reset;
    if (!t.enabled.empty()) jt["enabled"] = t.enabled;
    j["transitions"].push_back(jt);
  }
  return j;
}

SystemDefinition load_definition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("system file '" + path + "': " + e.what());
  }
  return definition_from_json(j);
}

HybridSystemSpec compile(const SystemDefinition& def) {
  HybridSystemSpec sys;
  sys.name = def.name;
  sys.parameters = def.parameters;
  sys.max_events_per_unit_time = def.max_events_per_unit_time;
  std::map<std::string, std::vector<std::string>> names_of;

  for (const auto& md : def.modes) {
    const std::string where = "mode '" + md.id + "'";
    if (md.dim < 0) throw ConfigError(where + ": negative dimension");
    ModeSpec m;
    m.id = md.id;
    m.dim = md.dim;
    m.state_names = md.state.empty() ? default_names(md.dim) : md.state;
    if (static_cast<int>(m.state_names.size()) != md.dim) {
      throw ConfigError(where + ": state names do not match dimension");
    }
    names_of[md.id] = m.state_names;

    const NormKind kind = parse_norm_kind(md.norm_kind);
    switch (kind) {
      case NormKind::kL1:
        m.norm = NormSpec::L1(md.dim);
        break;
      case NormKind::kL2:
        m.norm = NormSpec::L2(md.dim);
        break;
      case NormKind::kLinf:
        m.norm = NormSpec::Linf(md.dim);
        break;
      case NormKind::kWeightedL2: {
        if (static_cast<int>(md.weight.size()) != md.dim) {
          throw ConfigError(where + ": weight must be " + std::to_string(md.dim) + "x" +
                            std::to_string(md.dim));
        }
        Mat E(md.dim, md.dim);
        for (int i = 0; i < md.dim; ++i) {
          if (static_cast<int>(md.weight[i].size()) != md.dim) {
            throw ConfigError(where + ": weight row " + std::to_string(i) + " has wrong length");
          }
          for (int k = 0; k < md.dim; ++k) {
            E(i, k) = bind_one(md.weight[i][k], {}, def.parameters, where).eval(0.0, Vec(0));
          }
        }
        m.norm = NormSpec::Weighted(E);
        break;
      }
    }

    if (static_cast<int>(md.field.size()) != md.dim) {
      throw ConfigError(where + ": field has " + std::to_string(md.field.size()) +
                        " components, expected " + std::to_string(md.dim));
    }
    const auto field = bind_list(md.field, m.state_names, def.parameters, where);
    m.field = [field](double t, const Vec& x) { return eval_all(field, t, x); };
    m.jacobian = jacobian_fn(field, md.dim);
    std::vector<Expression> dt;
    for (const auto& e : field) dt.push_back(e.derivative(-1));
    m.time_partial = [dt](double t, const Vec& x) { return eval_all(dt, t, x); };
    if (!md.domain.empty()) {
      const auto dom = bind_list(md.domain, m.state_names, def.parameters, where);
      m.domain = [dom](double t, const Vec& x) {
        for (const auto& e : dom) {
          if (e.eval(t, x) < 0.0) return false;
        }
        return true;
      };
    }
    if (md.region) {
      if (md.region->lo.size() != md.dim || md.region->hi.size() != md.dim) {
        throw ConfigError(where + ": region has wrong dimension");
      }
      m.region = md.region;
    }
    sys.modes.push_back(std::move(m));
  }

  for (const auto& td : def.transitions) {
    const std::string where = "transition " + td.from + "->" + td.to;
    if (!names_of.count(td.from) || !names_of.count(td.to)) {
      throw ConfigError(where + ": unknown mode");
    }
    const auto& src_names = names_of[td.from];
    const int src_dim = static_cast<int>(src_names.size());
    Transition tr;
    tr.guard.source = td.from;
    tr.guard.target = td.to;
    const Expression g = bind_one(td.guard, src_names, def.parameters, where);
    std::vector<Expression> dg;
    for (int j = 0; j < src_dim; ++j) dg.push_back(g.derivative(j));
    const Expression gt = g.derivative(-1);
    tr.guard.g = [g](double t, const Vec& x) { return g.eval(t, x); };
    tr.guard.grad_x = [dg](double t, const Vec& x) { return eval_all(dg, t, x); };
    tr.guard.d_t = [gt](double t, const Vec& x) { return gt.eval(t, x); };
    if (!td.enabled.empty()) {
      const Expression en = bind_one(td.enabled, src_names, def.parameters, where);
      tr.guard.enabled = [en](double t, const Vec& x) { return en.eval(t, x) > 0.0; };
    }

    tr.reset.source = td.from;
    tr.reset.target = td.to;
    const auto reset = bind_list(td.reset, src_names, def.parameters, where);
    tr.reset.map = [reset](double t, const Vec& x) { return eval_all(reset, t, x); };
    tr.reset.jac_x = jacobian_fn(reset, src_dim);
    std::vector<Expression> rt;
    for (const auto& e : reset) rt.push_back(e.derivative(-1));
    tr.reset.d_t = [rt](double t, const Vec& x) { return eval_all(rt, t, x); };
    tr.reset.identity = td.reset == src_names && names_of[td.to].size() == src_names.size();
    sys.transitions.push_back(std::move(tr));
  }
  return sys;
}

}  // namespace hycon
