#include "hycon/io.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hycon/errors.h"

namespace hycon {

using nlohmann::json;

namespace {

// Non-finite values are written as strings since JSON has no literal for them.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_vec(const Vec& x, char sep) {
  std::string s;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += sep;
    s += fmt(x(i));
  }
  return s;
}

}  // namespace

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
    a.push_back(row);
  }
  return a;
}

Vec vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat mat_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Mat(0, 0);
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged matrix in JSON");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

json to_json(const HybridState& s) {
  return {{"mode", s.mode.name}, {"t", number(s.t)}, {"x", to_json(s.x)}};
}

json to_json(const ResetEvent& e) {
  return {{"t", number(e.t)},
          {"source", e.key.source.name},
          {"target", e.key.target.name},
          {"x_minus", to_json(e.x_minus)},
          {"x_plus", to_json(e.x_plus)},
          {"g", number(e.g_value)},
          {"transversality", number(e.transversality)},
          {"immediate", e.immediate}};
}

json to_json(const SaltationRecord& r) {
  return {{"event", to_json(r.event)},
          {"xi", to_json(r.xi)},
          {"induced_norm", number(r.induced_norm)},
          {"norm_approximate", r.norm_approximate},
          {"parts",
           {{"dx_reset", to_json(r.parts.dx_reset)},
            {"dt_reset", to_json(r.parts.dt_reset)},
            {"field_source", to_json(r.parts.field_source)},
            {"field_target", to_json(r.parts.field_target)},
            {"dx_guard", to_json(r.parts.dx_guard)},
            {"dt_guard", number(r.parts.dt_guard)},
            {"denominator", number(r.parts.denominator)}}}};
}

json to_json(const Witness& w) {
  return {{"location", w.location}, {"t", number(w.t)}, {"x", to_json(w.x)},
          {"value", number(w.value)}};
}

json to_json(const ContractionCertificate& c) {
  json flow = {{"c_hat", number(c.flow.c_hat)},
               {"c_sampled", number(c.flow.c_sampled)},
               {"witness", to_json(c.flow.witness)},
               {"samples", c.flow.samples},
               {"per_mode", json::array()}};
  for (const auto& w : c.flow.per_mode) flow["per_mode"].push_back(to_json(w));
  json resets = {{"K_hat", number(c.resets.K_hat)},
                 {"K_sampled", number(c.resets.K_sampled)},
                 {"witness", to_json(c.resets.witness)},
                 {"samples", c.resets.samples},
                 {"transversality_failures", c.resets.transversality_failures},
                 {"approximate", c.resets.approximate},
                 {"notes", c.resets.notes},
                 {"per_transition", json::array()}};
  for (const auto& w : c.resets.per_transition) resets["per_transition"].push_back(to_json(w));
  json out = {{"c_hat", number(c.flow.c_hat)},
              {"K_hat", number(c.resets.K_hat)},
              {"verdict", to_string(c.verdict)},
              {"flow", flow},
              {"resets", resets},
              {"options",
               {{"c_target", number(c.options.c_target)}, {"k_tol", number(c.options.k_tol)}}}};
  if (c.options.tau_lower) out["options"]["tau_lower"] = number(*c.options.tau_lower);
  if (c.options.tau_upper) out["options"]["tau_upper"] = number(*c.options.tau_upper);
  if (c.envelope) {
    out["envelope"] = {{"c", number(c.envelope->c)},
                       {"K", number(c.envelope->K)},
                       {"tau_lower", number(c.envelope->tau_lower)},
                       {"tau_upper", number(c.envelope->tau_upper)},
                       {"contractive_flag", c.envelope->contractive_flag()}};
  }
  return out;
}

json to_json(const PathCandidate& p) {
  json segs = json::array();
  for (const auto& s : p.segments) {
    json pts = json::array();
    for (const auto& w : s.waypoints) pts.push_back(to_json(w));
    segs.push_back({{"mode", s.mode.name}, {"waypoints", pts}});
  }
  json jumps = json::array();
  for (const auto& j : p.jumps) {
    jumps.push_back({{"source", j.key.source.name},
                     {"target", j.key.target.name},
                     {"x", to_json(j.x)},
                     {"reversed", j.reversed}});
  }
  return {{"t", number(p.t)}, {"segments", segs}, {"jumps", jumps}};
}

json to_json(const DistanceEstimate& d) {
  return {{"value", number(d.value)},
          {"exactness", to_string(d.exactness)},
          {"reachable", d.reachable},
          {"converged", d.converged},
          {"sequences_tried", d.sequences_tried},
          {"path", to_json(d.path)}};
}

json to_json(const TranslationResetReport& r) {
  json out = {{"applicable", r.applicable},
              {"reason", r.reason},
              {"samples", r.samples},
              {"min_norm", number(r.min_norm)},
              {"max_norm", number(r.max_norm)},
              {"lower_bound_holds", r.lower_bound_holds},
              {"two_norm", r.two_norm},
              {"alignment_mismatches", r.alignment_mismatches}};
  return out;
}

json to_json(const SwitchingSurfaceReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"t", number(s.t)},
                       {"x", to_json(s.x)},
                       {"mu_M", number(s.mu_M)},
                       {"mu_beta_M", number(s.mu_beta_M)},
                       {"xi_norm", number(s.xi_norm)}});
  }
  return {{"applicable", r.applicable},
          {"reason", r.reason},
          {"max_mu_M", number(r.max_mu_M)},
          {"max_mu_beta_M", number(r.max_mu_beta_M)},
          {"max_xi_norm", number(r.max_xi_norm)},
          {"consistent", r.consistent},
          {"expansion_co_occurrences", r.expansion_co_occurrences},
          {"samples", samples}};
}

std::string csv_header_line(const std::string& system, unsigned seed) {
  return "# system=" + system + " seed=" + std::to_string(seed) + "\n";
}

std::string trajectory_csv(const HybridSystemSpec& sys, const HybridTrajectory& traj,
                           const std::string& header_line, double sample_dt) {
  const int n = sys.max_dim();
  std::ostringstream os;
  os << header_line << "t,mode";
  for (int i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << ",event\n";
  auto row = [&](double t, const std::string& mode, const Vec& x, int event) {
    os << fmt(t) << ',' << mode;
    for (int i = 0; i < n; ++i) {
      os << ',';
      if (i < x.size()) os << fmt(x(i));
    }
    os << ',' << event << '\n';
  };

  if (traj.arcs.empty()) {
    row(traj.initial.t, traj.initial.mode.name, traj.initial.x, 0);
    return os.str();
  }
  for (std::size_t a = 0; a < traj.arcs.size(); ++a) {
    const auto& arc = traj.arcs[a];
    // Arcs after the first start with the post-reset state of an event.
    const int first_event = a > 0 ? 1 : 0;
    if (sample_dt > 0.0) {
      row(arc.t_start, arc.mode.name, arc.x_start, first_event);
      const double t0 = traj.initial.t;
      long k = static_cast<long>(std::floor((arc.t_start - t0) / sample_dt)) + 1;
      for (;; ++k) {
        const double t = t0 + static_cast<double>(k) * sample_dt;
        if (t >= arc.t_end) break;
        row(t, arc.mode.name, arc.eval(t), 0);
      }
      if (arc.t_end > arc.t_start) row(arc.t_end, arc.mode.name, arc.x_end, 0);
    } else {
      const auto samples = arc.samples();
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i > 0 && samples[i].first <= samples[i - 1].first) continue;
        row(samples[i].first, arc.mode.name, samples[i].second, i == 0 ? first_event : 0);
      }
    }
  }
  return os.str();
}

json events_json(const HybridTrajectory& traj) {
  json ev = json::array();
  for (const auto& e : traj.events) ev.push_back(to_json(e));
  return {{"status", to_string(traj.status)},
          {"message", traj.message},
          {"initial", to_json(traj.initial)},
          {"final", to_json(traj.final_state)},
          {"events", ev}};
}

std::string certificate_csv(const ContractionCertificate& c, const std::string& header_line) {
  std::ostringstream os;
  os << header_line << "location,kind,value,t,x\n";
  auto row = [&](const Witness& w, const char* kind) {
    os << w.location << ',' << kind << ',' << fmt(w.value) << ',' << fmt(w.t) << ",\""
       << join_vec(w.x, ' ') << "\"\n";
  };
  for (const auto& w : c.flow.per_mode) row(w, "measure");
  for (const auto& w : c.resets.per_transition) row(w, "saltation_norm");
  return os.str();
}

std::string experiment_csv(const ExperimentReport& r, const std::string& header_line) {
  std::ostringstream os;
  os << header_line << "pair,t,distance,bound,ratio\n";
  for (std::size_t p = 0; p < r.pairs.size(); ++p) {
    const auto& pr = r.pairs[p];
    for (std::size_t i = 0; i < pr.times.size(); ++i) {
      os << p << ',' << fmt(pr.times[i]) << ',' << fmt(pr.distances[i]) << ','
         << fmt(pr.bounds[i]) << ',' << fmt(pr.ratios[i]) << '\n';
    }
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("failed writing " + path);
}

}  // namespace hycon
