#include "hycon/contraction.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hycon/errors.h"

namespace hycon {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

// Halton point in [0, 1)^dim; the seed shifts the start of the sequence.
Vec halton(std::uint64_t index, int dim, unsigned seed) {
  Vec u(dim);
  for (int k = 0; k < dim; ++k) {
    const unsigned base = kPrimes[k % 25];
    const double shift = k >= 25 ? 0.5 * (k / 25) / (1 + k / 25) : 0.0;
    const double v = radical_inverse(index + 1 + seed, base) + shift;
    u(k) = v - std::floor(v);
  }
  return u;
}

struct Region {
  bool is_box{true};
  Vec lo, hi;           // box
  Vec center;
  Mat shape;            // ellipsoid
};

Region region_of(const HybridSystemSpec& sys, const ModeId& id, const SamplingPlan& plan) {
  const ModeSpec& m = sys.mode(id);
  Region r;
  auto it = plan.regions.find(id);
  if (it != plan.regions.end() && it->second.ellipsoid) {
    r.is_box = false;
    r.center = it->second.ellipsoid->center;
    r.shape = it->second.ellipsoid->shape;
    if (r.center.size() != m.dim || r.shape.rows() != m.dim || r.shape.cols() != m.dim) {
      throw DimensionError("sampling ellipsoid for mode '" + id.name + "' has wrong dimension");
    }
    return r;
  }
  std::optional<Box> box;
  if (it != plan.regions.end() && it->second.box) box = it->second.box;
  if (!box) box = m.region;
  if (!box) {
    if (m.dim == 0) {
      box = Box{Vec(0), Vec(0)};
    } else {
      throw ConfigError("no sampling region for mode '" + id.name + "'");
    }
  }
  if (box->lo.size() != m.dim || box->hi.size() != m.dim) {
    throw DimensionError("sampling box for mode '" + id.name + "' has wrong dimension");
  }
  r.lo = box->lo;
  r.hi = box->hi;
  r.center = box->center();
  return r;
}

bool in_region(const Region& r, const Vec& x) {
  if (r.is_box) {
    return ((x.array() >= r.lo.array() - 1e-12) && (x.array() <= r.hi.array() + 1e-12)).all();
  }
  const Vec u = r.shape.fullPivLu().solve(x - r.center);
  return u.norm() <= 1.0 + 1e-12;
}

Vec region_point(const Region& r, const Vec& u01) {
  if (r.is_box) return r.lo.array() + u01.array() * (r.hi - r.lo).array();
  // Radial map of the cube [-1, 1]^n onto the unit ball.
  const Vec v = 2.0 * u01.array() - 1.0;
  const double len = v.norm();
  if (len == 0.0) return r.center;
  return r.center + r.shape * (v * (v.lpNorm<Eigen::Infinity>() / len));
}

// Largest s with center + s d inside the region.
double exit_parameter(const Region& r, const Vec& d) {
  if (r.is_box) {
    double s = kInf;
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      if (d(k) > 0) s = std::min(s, (r.hi(k) - r.center(k)) / d(k));
      if (d(k) < 0) s = std::min(s, (r.lo(k) - r.center(k)) / d(k));
    }
    return s;
  }
  const Vec u = r.shape.fullPivLu().solve(d);
  return 1.0 / u.norm();
}

double scale_of(const Vec& x) { return 1.0 + (x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0); }

bool in_domain_closure(const ModeSpec& mode, const GuardSpec& guard, double t, const Vec& x) {
  if (!mode.domain || in_domain(mode, t, x)) return true;
  if (x.size() == 0) return false;
  const Vec dg = guard_gradient(guard, t, x);
  const double n = dg.norm();
  if (!(n > 0.0)) return false;
  const Vec nudge = (1e-9 * scale_of(x) / n) * dg;
  return in_domain(mode, t, x + nudge) || in_domain(mode, t, x - nudge);
}

unsigned key_seed(const TransitionKey& key, unsigned seed) {
  return static_cast<unsigned>(std::hash<std::string>{}(key.to_string()) ^ (seed * 2654435761u));
}

// Pattern-search ascent of f from x0 inside the admissible set.
std::pair<Vec, double> ascend(const std::function<double(Vec&)>& f, Vec x0, double f0,
                              double step, double min_step, int max_evals) {
  Vec x = std::move(x0);
  double fx = f0;
  const Eigen::Index n = x.size();
  int evals = 0;
  while (step > min_step && evals < max_evals) {
    bool improved = false;
    for (Eigen::Index k = 0; k < n && evals < max_evals; ++k) {
      for (double sgn : {1.0, -1.0}) {
        Vec y = x;
        y(k) += sgn * step;
        const double fy = f(y);
        ++evals;
        if (fy > fx) {
          x = y;
          fx = fy;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {x, fx};
}

struct GuardEval {
  bool ok{false};
  bool transversal{true};
  SaltationRecord record;
};

GuardEval evaluate_guard_point(const HybridSystemSpec& sys, const TransitionKey& key, double t,
                               const Vec& x, double transversality_tol) {
  GuardEval e;
  SaltationOptions so;
  so.transversality_tol = transversality_tol;
  so.guard_tol = 1e-8;
  try {
    e.record = saltation(sys, key, t, x, so);
    e.ok = true;
  } catch (const TransversalityError&) {
    e.transversal = false;
  } catch (const OffGuardError&) {
  }
  return e;
}

}  // namespace

std::vector<GuardPoint> sample_mode(const HybridSystemSpec& sys, const ModeId& id,
                                    const SamplingPlan& plan) {
  const ModeSpec& m = sys.mode(id);
  std::vector<GuardPoint> out;
  if (plan.flow_samples < 1 && plan.grid_per_axis < 1) {
    throw ConfigError("sampling plan needs at least one flow sample");
  }
  if (plan.times.empty()) throw ConfigError("sampling plan needs at least one time sample");
  if (m.dim == 0) {
    for (double t : plan.times) out.push_back({t, Vec(0)});
    return out;
  }
  const Region r = region_of(sys, id, plan);
  std::vector<Vec> pts;
  for (int i = 0; i < plan.flow_samples; ++i) pts.push_back(region_point(r, halton(i, m.dim, plan.seed)));
  if (plan.grid_per_axis > 0) {
    const int g = plan.grid_per_axis;
    std::vector<int> idx(m.dim, 0);
    for (;;) {
      Vec u(m.dim);
      for (int k = 0; k < m.dim; ++k) u(k) = g == 1 ? 0.5 : static_cast<double>(idx[k]) / (g - 1);
      pts.push_back(region_point(r, u));
      int k = 0;
      while (k < m.dim && ++idx[k] == g) idx[k++] = 0;
      if (k == m.dim) break;
    }
  }
  for (double t : plan.times) {
    for (const Vec& x : pts) {
      if (in_region(r, x) && in_domain(m, t, x)) out.push_back({t, x});
    }
  }
  return out;
}

std::vector<GuardPoint> sample_guard(const HybridSystemSpec& sys, const TransitionKey& key,
                                     const SamplingPlan& plan) {
  auto explicit_pts = plan.guard_points.find(key);
  if (explicit_pts != plan.guard_points.end()) return explicit_pts->second;
  const Transition& tr = sys.transition(key);
  const ModeSpec& src = sys.mode(key.source);
  std::vector<GuardPoint> out;
  if (src.dim == 0) {
    for (double t : plan.times) {
      const Vec e(0);
      if (std::abs(eval_guard(tr.guard, t, e)) <= 1e-12 && guard_enabled(tr.guard, t, e)) {
        out.push_back({t, e});
      }
    }
    return out;
  }
  const Region r = region_of(sys, key.source, plan);
  std::mt19937_64 rng(key_seed(key, plan.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const int scan = std::max(4, plan.ray_scan);
  for (double t : plan.times) {
    std::size_t found = 0;
    const int max_rays = 20 * std::max(1, plan.guard_samples);
    for (int ray = 0; ray < max_rays && found < static_cast<std::size_t>(plan.guard_samples);
         ++ray) {
      Vec d(src.dim);
      for (int k = 0; k < src.dim; ++k) d(k) = normal(rng);
      if (d.norm() == 0.0) continue;
      d /= d.norm();
      const double s_max = exit_parameter(r, d);
      if (!std::isfinite(s_max) || s_max <= 0.0) continue;
      auto g_at = [&](double s) { return eval_guard(tr.guard, t, Vec(r.center + s * d)); };
      double s_prev = 0.0;
      double g_prev = g_at(0.0);
      for (int k = 1; k <= scan && found < static_cast<std::size_t>(plan.guard_samples); ++k) {
        const double s = s_max * k / scan;
        const double gs = g_at(s);
        if ((g_prev > 0.0) != (gs > 0.0)) {
          double lo = s_prev, hi = s, glo = g_prev;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + s_max); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = g_at(mid);
            if ((gm > 0.0) == (glo > 0.0)) {
              lo = mid;
              glo = gm;
            } else {
              hi = mid;
            }
          }
          Vec x = r.center + 0.5 * (lo + hi) * d;
          if (auto p = project_to_guard(tr.guard, t, x)) x = *p;
          if (std::abs(eval_guard(tr.guard, t, x)) <= 1e-10 * scale_of(x) && in_region(r, x) &&
              guard_enabled(tr.guard, t, x) && in_domain_closure(src, tr.guard, t, x)) {
            out.push_back({t, x});
            ++found;
          }
        }
        s_prev = s;
        g_prev = gs;
      }
    }
  }
  return out;
}

FlowCertificate certify_flow(const HybridSystemSpec& sys, const SamplingPlan& plan) {
  FlowCertificate cert;
  cert.c_hat = -kInf;
  cert.c_sampled = -kInf;
  cert.witness.value = -kInf;
  for (const ModeSpec& m : sys.modes) {
    Witness w;
    w.location = m.id.name;
    w.value = -kInf;
    if (m.dim == 0) {
      // The measure of a 0x0 matrix is -inf; nothing to bound.
      cert.per_mode.push_back(w);
      continue;
    }
    const auto pts = sample_mode(sys, m.id, plan);
    for (const GuardPoint& p : pts) {
      const double mu = matrix_measure(jacobian_of_field(m, p.t, p.x), m.norm);
      ++cert.samples;
      if (mu > w.value) {
        w.value = mu;
        w.t = p.t;
        w.x = p.x;
      }
    }
    cert.c_sampled = std::max(cert.c_sampled, w.value);
    if (plan.refine && std::isfinite(w.value)) {
      const Region r = region_of(sys, m.id, plan);
      const double t = w.t;
      auto f = [&](Vec& x) -> double {
        if (!in_region(r, x) || !in_domain(m, t, x)) return -kInf;
        try {
          return matrix_measure(jacobian_of_field(m, t, x), m.norm);
        } catch (const EvaluationError&) {
          return -kInf;
        }
      };
      const double width = r.is_box ? (r.hi - r.lo).maxCoeff() : r.shape.norm();
      auto [x, v] = ascend(f, w.x, w.value, 0.05 * width, 1e-6 * width, 4000);
      if (v > w.value) {
        w.value = v;
        w.x = x;
      }
    }
    if (w.value > cert.witness.value) cert.witness = w;
    cert.per_mode.push_back(w);
  }
  cert.c_hat = cert.witness.value;
  return cert;
}

ResetCertificate certify_resets(const HybridSystemSpec& sys, const SamplingPlan& plan,
                                const CertifyOptions& options) {
  ResetCertificate cert;
  cert.K_hat = 0.0;
  cert.K_sampled = 0.0;
  cert.witness.value = -kInf;
  for (const Transition& tr : sys.transitions) {
    const TransitionKey key = tr.key();
    Witness w;
    w.location = key.to_string();
    w.value = -kInf;
    const auto pts = sample_guard(sys, key, plan);
    std::size_t used = 0;
    for (const GuardPoint& p : pts) {
      const GuardEval e = evaluate_guard_point(sys, key, p.t, p.x, options.transversality_tol);
      if (!e.ok) {
        if (!e.transversal) ++cert.transversality_failures;
        continue;
      }
      ++used;
      ++cert.samples;
      cert.approximate = cert.approximate || e.record.norm_approximate;
      if (e.record.induced_norm > w.value) {
        w.value = e.record.induced_norm;
        w.t = p.t;
        w.x = p.x;
      }
    }
    if (used == 0) {
      cert.notes.push_back("no admissible guard samples for " + key.to_string());
      cert.per_transition.push_back(w);
      continue;
    }
    cert.K_sampled = std::max(cert.K_sampled, w.value);
    const ModeSpec& src = sys.mode(key.source);
    if (plan.refine && src.dim > 0) {
      const Region r = region_of(sys, key.source, plan);
      const double t = w.t;
      auto f = [&](Vec& x) -> double {
        try {
          auto p = project_to_guard(tr.guard, t, x);
          if (!p || !in_region(r, *p) || !guard_enabled(tr.guard, t, *p) ||
              !in_domain_closure(src, tr.guard, t, *p)) {
            return -kInf;
          }
          x = *p;
          const GuardEval e = evaluate_guard_point(sys, key, t, x, options.transversality_tol);
          return e.ok ? e.record.induced_norm : -kInf;
        } catch (const EvaluationError&) {
          return -kInf;
        }
      };
      const double width = r.is_box ? (r.hi - r.lo).maxCoeff() : r.shape.norm();
      auto [x, v] = ascend(f, w.x, w.value, 0.05 * width, 1e-6 * width, 2000);
      if (v > w.value) {
        w.value = v;
        w.x = x;
      }
    }
    if (w.value > cert.witness.value) cert.witness = w;
    cert.per_transition.push_back(w);
  }
  cert.K_hat = std::isfinite(cert.witness.value) ? cert.witness.value : 0.0;
  return cert;
}

bool DwellEnvelope::contractive_flag() const {
  auto term = [&](double tau) {
    double e;
    if (std::isinf(tau)) {
      e = c < 0 ? 0.0 : (c > 0 ? kInf : 1.0);
    } else {
      e = std::exp(c * tau);
    }
    if (K == 0.0) return 0.0;
    return K * e;
  };
  return std::max(term(tau_lower), term(tau_upper)) < 1.0;
}

double envelope_bound(const DwellEnvelope& env, double d_s, double s, double t) {
  if (t < s || s < 0.0) throw Error("envelope_bound requires t >= s >= 0");
  auto ratio = [](double num, double den) {
    if (num == 0.0) return 0.0;
    if (den == 0.0) return kInf;
    return num / den;
  };
  auto power = [&](double n) {
    if (std::isinf(n)) return env.K > 1.0 ? kInf : (env.K == 1.0 ? 1.0 : 0.0);
    return std::pow(env.K, n);
  };
  const double n_lower = std::ceil(ratio(t, env.tau_lower));
  const double n_upper = std::isinf(env.tau_upper) ? 0.0 : std::floor(ratio(t - s, env.tau_upper));
  const double k = std::max(power(n_lower), power(n_upper));
  const double e = std::exp(env.c * (t - s));
  if (d_s == 0.0 || e == 0.0) return 0.0;
  return k * e * d_s;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kContractiveNonexpansiveResets:
      return "contractive_nonexpansive_resets";
    case Verdict::kEnvelopeOnly:
      return "envelope_only";
    case Verdict::kViolated:
      return "violated";
  }
  return "?";
}

ContractionCertificate certify(const HybridSystemSpec& sys, const SamplingPlan& plan,
                               const CertifyOptions& options) {
  ContractionCertificate cert;
  cert.options = options;
  cert.flow = certify_flow(sys, plan);
  cert.resets = certify_resets(sys, plan, options);
  const bool flow_ok = cert.flow.c_hat <= options.c_target + options.k_tol;
  const bool resets_ok = cert.resets.K_hat <= 1.0 + options.k_tol;
  if (options.tau_lower || options.tau_upper) {
    DwellEnvelope env;
    env.c = std::isfinite(cert.flow.c_hat) ? cert.flow.c_hat : 0.0;
    env.K = cert.resets.K_hat;
    env.tau_lower = options.tau_lower.value_or(0.0);
    env.tau_upper = options.tau_upper.value_or(kInf);
    cert.envelope = env;
  }
  if (flow_ok && resets_ok) {
    cert.verdict = Verdict::kContractiveNonexpansiveResets;
  } else if (cert.envelope && cert.envelope->contractive_flag()) {
    cert.verdict = Verdict::kEnvelopeOnly;
  } else {
    cert.verdict = Verdict::kViolated;
  }
  return cert;
}

TranslationResetReport check_translation_reset(const HybridSystemSpec& sys,
                                               const TransitionKey& key,
                                               const SamplingPlan& plan) {
  TranslationResetReport rep;
  const ModeSpec& src = sys.mode(key.source);
  const ModeSpec& dst = sys.mode(key.target);
  if (src.dim != dst.dim || !(src.norm == dst.norm)) {
    rep.reason = "source and target norms differ";
    return rep;
  }
  const auto pts = sample_guard(sys, key, plan);
  std::vector<SaltationRecord> recs;
  for (const GuardPoint& p : pts) {
    const GuardEval e = evaluate_guard_point(sys, key, p.t, p.x, 1e-10);
    if (!e.ok) continue;
    const Mat I = Mat::Identity(src.dim, src.dim);
    if ((e.record.parts.dx_reset - I).lpNorm<Eigen::Infinity>() > 1e-9) {
      rep.reason = "D_x R is not the identity at " + format_point(p.t, p.x);
      return rep;
    }
    recs.push_back(e.record);
  }
  if (recs.empty()) {
    rep.reason = "no admissible guard samples";
    return rep;
  }
  rep.applicable = true;
  rep.two_norm = src.norm.kind() == NormKind::kL2;
  rep.min_norm = kInf;
  rep.max_norm = -kInf;
  for (const SaltationRecord& r : recs) {
    ++rep.samples;
    rep.min_norm = std::min(rep.min_norm, r.induced_norm);
    rep.max_norm = std::max(rep.max_norm, r.induced_norm);
    if (r.induced_norm < 1.0 - 1e-9) rep.lower_bound_holds = false;
    if (!rep.two_norm) continue;
    AlignmentSample a;
    a.t = r.event.t;
    a.x = r.event.x_minus;
    a.xi_norm = r.induced_norm;
    const Vec d = r.parts.field_target - r.parts.field_source - r.parts.dt_reset;
    const Vec& n = r.parts.dx_guard;
    const double n2 = n.squaredNorm();
    a.alpha = n2 > 0.0 ? d.dot(n) / n2 : 0.0;
    a.residual = (d - a.alpha * n).norm();
    a.alpha_max = n2 > 0.0 ? -2.0 * r.parts.denominator / n2 : 0.0;
    const double tol = 1e-9 * (1.0 + d.norm());
    a.aligned = a.residual <= tol;
    a.admissible = a.alpha >= -tol && a.alpha <= a.alpha_max + tol;
    const bool predicted_unit = a.aligned && a.admissible;
    const bool unit = std::abs(a.xi_norm - 1.0) <= 1e-8;
    if (predicted_unit != unit) ++rep.alignment_mismatches;
    rep.alignment.push_back(std::move(a));
  }
  return rep;
}

SwitchingSurfaceReport check_switching_surface(const HybridSystemSpec& sys,
                                               const TransitionKey& key,
                                               const SamplingPlan& plan, double tol) {
  SwitchingSurfaceReport rep;
  const Transition& tr = sys.transition(key);
  const ModeSpec& src = sys.mode(key.source);
  const ModeSpec& dst = sys.mode(key.target);
  if (!tr.reset.identity || src.dim != dst.dim || !(src.norm == dst.norm)) {
    rep.reason = "requires an identity reset between modes with equal norms";
    return rep;
  }
  rep.applicable = true;
  rep.max_mu_M = -kInf;
  rep.max_mu_beta_M = -kInf;
  rep.max_xi_norm = -kInf;
  for (const GuardPoint& p : sample_guard(sys, key, plan)) {
    const GuardEval e = evaluate_guard_point(sys, key, p.t, p.x, 1e-10);
    if (!e.ok) continue;
    const SaltationParts& parts = e.record.parts;
    SwitchingSample s;
    s.t = p.t;
    s.x = p.x;
    const Mat M = (parts.field_target - parts.field_source) * parts.dx_guard.transpose();
    s.mu_M = matrix_measure(M, src.norm);
    s.mu_beta_M = matrix_measure(M / parts.denominator, src.norm);
    s.xi_norm = e.record.induced_norm;
    rep.max_mu_M = std::max(rep.max_mu_M, s.mu_M);
    rep.max_mu_beta_M = std::max(rep.max_mu_beta_M, s.mu_beta_M);
    rep.max_xi_norm = std::max(rep.max_xi_norm, s.xi_norm);
    const bool unit = s.xi_norm <= 1.0 + tol;
    if (unit && s.mu_beta_M > tol) rep.consistent = false;
    if (s.mu_beta_M > tol && s.xi_norm > 1.0 + tol) ++rep.expansion_co_occurrences;
    rep.samples.push_back(std::move(s));
  }
  return rep;
}

double ambient_distance(const HybridSystemSpec& sys, const HybridState& a, const HybridState& b) {
  if (a.x.size() != b.x.size()) {
    throw DimensionError("ambient distance needs states of equal dimension");
  }
  return vector_norm(a.x - b.x, sys.mode(a.mode).norm);
}

ExperimentReport pairwise_contraction_experiment(
    const HybridSystemSpec& sys, const std::vector<std::pair<HybridState, HybridState>>& inits,
    double t_end, const DwellEnvelope& envelope, const ExperimentOptions& options) {
  ExperimentReport rep;
  const int grid = std::max(2, options.grid);
  for (const auto& [xa, xb] : inits) {
    PairReport pr;
    try {
      if (xa.t != xb.t) throw Error("pair starts at different times");
      const double s = xa.t;
      const HybridTrajectory ta = simulate(sys, xa, t_end, options.simulation);
      const HybridTrajectory tb = simulate(sys, xb, t_end, options.simulation);
      if (ta.status != TrajectoryStatus::kCompleted || tb.status != TrajectoryStatus::kCompleted) {
        throw Error("simulation ended with status " +
                    to_string(ta.status != TrajectoryStatus::kCompleted ? ta.status : tb.status));
      }
      auto dist = [&](const HybridState& p, const HybridState& q, double t) {
        if (options.distance == DistanceKind::kAmbient) return ambient_distance(sys, p, q);
        return distance(sys, p, q, t, options.distance_options).value;
      };
      double d0 = 0.0;
      for (int k = 0; k < grid; ++k) {
        const double t = s + (t_end - s) * k / (grid - 1);
        const HybridState pa = ta.state_at(t);
        const HybridState pb = tb.state_at(t);
        const double d = dist(pa, pb, t);
        if (k == 0) d0 = d;
        const double bound = envelope_bound(envelope, d0, s, t);
        const double ratio = bound > 0.0 ? d / bound : (d <= 1e-15 ? 0.0 : kInf);
        if (k > 0) pr.max_increase = std::max(pr.max_increase, d - pr.distances.back());
        pr.times.push_back(t);
        pr.distances.push_back(d);
        pr.bounds.push_back(bound);
        pr.ratios.push_back(ratio);
        pr.max_ratio = std::max(pr.max_ratio, ratio);
      }
    } catch (const std::exception& e) {
      pr.error = e.what();
      pr.max_ratio = kInf;
    }
    rep.max_ratio = std::max(rep.max_ratio, pr.max_ratio);
    rep.pairs.push_back(std::move(pr));
  }
  return rep;
}

}  // namespace hycon
