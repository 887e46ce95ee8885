#include "hycon/hybrid_model.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "hycon/errors.h"

namespace hycon {
namespace {

template <typename F>
auto guarded(const std::string& what, double t, const Vec& x, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(what + " failed at " + format_point(t, x) + ": " + e.what());
  }
}

void require_finite(const Vec& v, const std::string& what, double t, const Vec& x) {
  if (!v.allFinite()) {
    throw EvaluationError(what + " returned a non-finite value at " + format_point(t, x));
  }
}

double fd_step(const Vec& x) {
  const double scale = x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>();
  return 1e-5 * (1.0 + scale);
}

}  // namespace

std::string format_point(double t, const Vec& x) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << ", x=[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i > 0) os << ", ";
    os << x(i);
  }
  os << "]";
  return os.str();
}

ResetSpec ResetSpec::Identity(const ModeId& source, const ModeId& target, int dim) {
  ResetSpec r;
  r.source = source;
  r.target = target;
  r.map = [](double, const Vec& x) { return x; };
  r.jac_x = [dim](double, const Vec&) { return Mat(Mat::Identity(dim, dim)); };
  r.identity = true;
  return r;
}

const ModeSpec* HybridSystemSpec::find_mode(const ModeId& id) const {
  for (const auto& m : modes) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

const ModeSpec& HybridSystemSpec::mode(const ModeId& id) const {
  const ModeSpec* m = find_mode(id);
  if (m == nullptr) throw ConfigError("unknown mode '" + id.name + "'");
  return *m;
}

const Transition* HybridSystemSpec::find_transition(const TransitionKey& key) const {
  for (const auto& tr : transitions) {
    if (tr.key() == key) return &tr;
  }
  return nullptr;
}

const Transition& HybridSystemSpec::transition(const TransitionKey& key) const {
  const Transition* tr = find_transition(key);
  if (tr == nullptr) throw ConfigError("unknown transition " + key.to_string());
  return *tr;
}

std::vector<const Transition*> HybridSystemSpec::outgoing(const ModeId& id) const {
  std::vector<const Transition*> out;
  for (const auto& tr : transitions) {
    if (tr.guard.source == id) out.push_back(&tr);
  }
  std::sort(out.begin(), out.end(),
            [](const Transition* a, const Transition* b) { return a->key() < b->key(); });
  return out;
}

int HybridSystemSpec::max_dim() const {
  int d = 0;
  for (const auto& m : modes) d = std::max(d, m.dim);
  return d;
}

Mat finite_difference_jacobian(const VectorFn& f, double t, const Vec& x,
                               Eigen::Index rows) {
  const Eigen::Index n = x.size();
  Mat J(rows, n);
  const double h = fd_step(x);
  Vec xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp(j) = x(j) + 2 * h;
    const Vec f2p = f(t, xp);
    xp(j) = x(j) + h;
    const Vec f1p = f(t, xp);
    xp(j) = x(j) - h;
    const Vec f1m = f(t, xp);
    xp(j) = x(j) - 2 * h;
    const Vec f2m = f(t, xp);
    xp(j) = x(j);
    J.col(j) = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
  }
  return J;
}

Vec finite_difference_gradient(const ScalarFn& f, double t, const Vec& x) {
  VectorFn vf = [&f](double tt, const Vec& xx) {
    Vec v(1);
    v(0) = f(tt, xx);
    return v;
  };
  return finite_difference_jacobian(vf, t, x, 1).row(0).transpose();
}

Vec eval_field(const ModeSpec& mode, double t, const Vec& x) {
  if (x.size() != mode.dim) {
    throw DimensionError("state of size " + std::to_string(x.size()) + " in mode '" +
                         mode.id.name + "' of dimension " + std::to_string(mode.dim));
  }
  if (mode.dim == 0) return Vec(0);
  Vec v = guarded("field of mode '" + mode.id.name + "'", t, x,
                  [&] { return mode.field(t, x); });
  if (v.size() != mode.dim) {
    throw DimensionError("field of mode '" + mode.id.name + "' returned " +
                         std::to_string(v.size()) + " components, expected " +
                         std::to_string(mode.dim));
  }
  require_finite(v, "field of mode '" + mode.id.name + "'", t, x);
  return v;
}

Mat jacobian_of_field(const ModeSpec& mode, double t, const Vec& x) {
  if (x.size() != mode.dim) {
    throw DimensionError("state of size " + std::to_string(x.size()) + " in mode '" +
                         mode.id.name + "' of dimension " + std::to_string(mode.dim));
  }
  if (mode.dim == 0) return Mat(0, 0);
  if (mode.jacobian) {
    return guarded("jacobian of mode '" + mode.id.name + "'", t, x,
                   [&] { return mode.jacobian(t, x); });
  }
  VectorFn f = [&mode](double tt, const Vec& xx) { return eval_field(mode, tt, xx); };
  return finite_difference_jacobian(f, t, x, mode.dim);
}

double eval_guard(const GuardSpec& guard, double t, const Vec& x) {
  const std::string what = "guard " + guard.source.name + "->" + guard.target.name;
  const double v = guarded(what, t, x, [&] { return guard.g(t, x); });
  if (!std::isfinite(v)) {
    throw EvaluationError(what + " returned a non-finite value at " + format_point(t, x));
  }
  return v;
}

Vec guard_gradient(const GuardSpec& guard, double t, const Vec& x) {
  if (x.size() == 0) return Vec(0);
  if (guard.grad_x) {
    return guarded("guard gradient " + guard.source.name + "->" + guard.target.name, t, x,
                   [&] { return guard.grad_x(t, x); });
  }
  return finite_difference_gradient(guard.g, t, x);
}

double guard_time_derivative(const GuardSpec& guard, double t, const Vec& x) {
  if (guard.d_t) {
    return guarded("guard time derivative " + guard.source.name + "->" + guard.target.name,
                   t, x, [&] { return guard.d_t(t, x); });
  }
  return 0.0;
}

bool guard_enabled(const GuardSpec& guard, double t, const Vec& x) {
  if (!guard.enabled) return true;
  return guarded("guard applicability " + guard.source.name + "->" + guard.target.name, t,
                 x, [&] { return guard.enabled(t, x); });
}

Vec eval_reset(const ResetSpec& reset, double t, const Vec& x) {
  const std::string what = "reset " + reset.source.name + "->" + reset.target.name;
  Vec v = guarded(what, t, x, [&] { return reset.map(t, x); });
  require_finite(v, what, t, x);
  return v;
}

Mat reset_jacobian(const ResetSpec& reset, double t, const Vec& x) {
  if (reset.jac_x) {
    return guarded("reset jacobian " + reset.source.name + "->" + reset.target.name, t, x,
                   [&] { return reset.jac_x(t, x); });
  }
  const Vec y = eval_reset(reset, t, x);
  if (x.size() == 0) return Mat(y.size(), 0);
  VectorFn f = [&reset](double tt, const Vec& xx) { return eval_reset(reset, tt, xx); };
  return finite_difference_jacobian(f, t, x, y.size());
}

Vec reset_time_derivative(const ResetSpec& reset, double t, const Vec& x) {
  if (reset.d_t) {
    return guarded("reset time derivative " + reset.source.name + "->" + reset.target.name,
                   t, x, [&] { return reset.d_t(t, x); });
  }
  return Vec::Zero(eval_reset(reset, t, x).size());
}

bool in_domain(const ModeSpec& mode, double t, const Vec& x) {
  if (!mode.domain) return true;
  return guarded("domain of mode '" + mode.id.name + "'", t, x,
                 [&] { return mode.domain(t, x); });
}

std::vector<Diagnostic> validate(const HybridSystemSpec& sys,
                                 const ValidationOptions& options) {
  std::vector<Diagnostic> out;
  auto report = [&out](std::string kind, std::string location, std::string message) {
    out.push_back({std::move(kind), std::move(location), std::move(message)});
  };

  std::set<ModeId> ids;
  for (const auto& m : sys.modes) {
    if (!ids.insert(m.id).second) {
      report("structure", m.id.name, "duplicate mode id");
    }
    if (m.dim < 0) report("dimension", m.id.name, "negative dimension");
    if (m.norm.dim() != m.dim) {
      report("dimension", m.id.name,
             "norm dimension " + std::to_string(m.norm.dim()) + " differs from mode dimension " +
                 std::to_string(m.dim));
    }
    if (m.dim > 0 && !m.field) report("structure", m.id.name, "missing vector field");
  }
  if (sys.max_events_per_unit_time <= 0) {
    report("structure", sys.name, "max_events_per_unit_time must be positive");
  }
  std::set<TransitionKey> keys;
  for (const auto& tr : sys.transitions) {
    const std::string loc = tr.key().to_string();
    if (tr.guard.source != tr.reset.source || tr.guard.target != tr.reset.target) {
      report("structure", loc, "guard and reset disagree on (source, target)");
    }
    if (!keys.insert(tr.key()).second) report("structure", loc, "duplicate transition");
    if (sys.find_mode(tr.guard.source) == nullptr) {
      report("structure", loc, "unknown source mode '" + tr.guard.source.name + "'");
    }
    if (sys.find_mode(tr.guard.target) == nullptr) {
      report("structure", loc, "unknown target mode '" + tr.guard.target.name + "'");
    }
    if (!tr.guard.g) report("structure", loc, "missing guard function");
    if (!tr.reset.map) report("structure", loc, "missing reset map");
  }
  if (!out.empty()) return out;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto sample = [&](const ModeSpec& m) {
    Vec x(m.dim);
    for (int i = 0; i < m.dim; ++i) {
      if (m.region) {
        x(i) = m.region->lo(i) + (m.region->hi(i) - m.region->lo(i)) * unit(rng);
      } else {
        x(i) = normal(rng);
      }
    }
    return x;
  };
  const double t = options.t;

  for (const auto& m : sys.modes) {
    if (m.dim == 0) continue;
    bool dim_reported = false;
    bool jac_reported = false;
    for (int s = 0; s < options.samples_per_mode; ++s) {
      const Vec x = sample(m);
      try {
        const Vec f = m.field(t, x);
        if (f.size() != m.dim && !dim_reported) {
          report("dimension", m.id.name,
                 "field returns " + std::to_string(f.size()) + " components at " +
                     format_point(t, x));
          dim_reported = true;
          continue;
        }
        if (m.jacobian && !jac_reported) {
          const Mat J = m.jacobian(t, x);
          VectorFn fn = m.field;
          const Mat Jfd = finite_difference_jacobian(fn, t, x, m.dim);
          if (J.rows() != m.dim || J.cols() != m.dim) {
            report("dimension", m.id.name, "jacobian has wrong shape");
            jac_reported = true;
          } else if ((J - Jfd).norm() > options.jacobian_rel_tol * std::max(1.0, J.norm())) {
            report("jacobian", m.id.name,
                   "analytic jacobian disagrees with finite differences at " +
                       format_point(t, x));
            jac_reported = true;
          }
        }
      } catch (const std::exception& e) {
        report("evaluation", m.id.name, e.what());
        break;
      }
    }
  }

  for (const auto& tr : sys.transitions) {
    const std::string loc = tr.key().to_string();
    const ModeSpec& src = sys.mode(tr.guard.source);
    const ModeSpec& dst = sys.mode(tr.guard.target);
    bool reset_reported = false;
    bool nondegeneracy_reported = false;
    for (int s = 0; s < options.samples_per_mode; ++s) {
      Vec x = sample(src);
      try {
        const Vec y = tr.reset.map(t, x);
        if (y.size() != dst.dim && !reset_reported) {
          report("dimension", loc,
                 "reset returns " + std::to_string(y.size()) + " components, target '" +
                     dst.id.name + "' has dimension " + std::to_string(dst.dim));
          reset_reported = true;
        }
        if (src.dim == 0 || nondegeneracy_reported) continue;
        // Move the sample onto g = 0 with a few Newton steps along the
        // gradient, then check |D_x g| there.
        bool degenerate = false;
        for (int it = 0; it < 20; ++it) {
          const double g = eval_guard(tr.guard, t, x);
          const Vec dg = guard_gradient(tr.guard, t, x);
          const double n2 = dg.squaredNorm();
          if (std::sqrt(n2) <= 1e-10) {
            degenerate = true;
            break;
          }
          if (std::abs(g) <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
          x -= (g / n2) * dg;
        }
        if (degenerate) {
          report("nondegeneracy", loc, "|D_x g| <= 1e-10 at " + format_point(t, x));
          nondegeneracy_reported = true;
        }
      } catch (const std::exception& e) {
        report("evaluation", loc, e.what());
        break;
      }
    }
  }
  return out;
}

std::optional<Vec> project_to_guard(const GuardSpec& guard, double t, const Vec& x, double tol,
                                    int max_iterations) {
  Vec y = x;
  for (int it = 0; it <= max_iterations; ++it) {
    const double g = eval_guard(guard, t, y);
    const double scale = 1.0 + (y.size() ? y.lpNorm<Eigen::Infinity>() : 0.0);
    if (std::abs(g) <= tol * scale) {
      // A few more Newton steps while |g| still drops, down to rounding.
      double best = std::abs(g);
      for (int k = 0; k < 4 && best > 0.0 && y.size() > 0; ++k) {
        const Vec dg = guard_gradient(guard, t, y);
        const double n2 = dg.squaredNorm();
        if (!(n2 > 1e-300)) break;
        const Vec z = y - (eval_guard(guard, t, y) / n2) * dg;
        const double gz = std::abs(eval_guard(guard, t, z));
        if (!(gz < best)) break;
        y = z;
        best = gz;
      }
      return y;
    }
    if (y.size() == 0 || it == max_iterations) return std::nullopt;
    const Vec dg = guard_gradient(guard, t, y);
    const double n2 = dg.squaredNorm();
    if (!(n2 > 1e-300)) return std::nullopt;
    y -= (g / n2) * dg;
  }
  return std::nullopt;
}

}  // namespace hycon
