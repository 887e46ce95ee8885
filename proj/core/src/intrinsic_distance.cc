#include "hycon/intrinsic_distance.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hycon/errors.h"

namespace hycon {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Step {
  const Transition* tr{nullptr};
  bool reversed{false};
};

double scale_of(const Vec& x) { return 1.0 + (x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0); }

bool near(const Vec& a, const Vec& b, double tol) {
  if (a.size() != b.size()) return false;
  if (a.size() == 0) return true;
  return (a - b).lpNorm<Eigen::Infinity>() <= tol * (1.0 + std::max(a.lpNorm<Eigen::Infinity>(),
                                                                    b.lpNorm<Eigen::Infinity>()));
}

// Closure of the source domain, allowing for round-off on the guard.
bool in_domain_closure(const ModeSpec& mode, const GuardSpec& guard, double t, const Vec& x) {
  if (!mode.domain || in_domain(mode, t, x)) return true;
  if (x.size() == 0) return false;
  const Vec dg = guard_gradient(guard, t, x);
  const double n = dg.norm();
  if (!(n > 0.0)) return false;
  const Vec nudge = (1e-9 * scale_of(x) / n) * dg;
  return in_domain(mode, t, x + nudge) || in_domain(mode, t, x - nudge);
}

bool jump_point_ok(const HybridSystemSpec& sys, const Transition& tr, double t, const Vec& x,
                   double guard_tol) {
  if (eval_guard(tr.guard, t, x) > guard_tol * scale_of(x)) return false;
  if (!guard_enabled(tr.guard, t, x)) return false;
  return in_domain_closure(sys.mode(tr.guard.source), tr.guard, t, x);
}

class SequenceObjective {
 public:
  SequenceObjective(const HybridSystemSpec& sys, const HybridState& a, const HybridState& b,
                    double t, std::vector<Step> steps, double guard_tol)
      : sys_(sys), a_(a), b_(b), t_(t), steps_(std::move(steps)), guard_tol_(guard_tol) {
    for (const Step& s : steps_) {
      offsets_.push_back(size_);
      size_ += sys_.mode(s.tr->guard.source).dim;
    }
  }

  int size() const { return size_; }
  const std::vector<Step>& steps() const { return steps_; }

  Vec point(const Vec& z, std::size_t i) const {
    const int d = sys_.mode(steps_[i].tr->guard.source).dim;
    return z.segment(offsets_[i], d);
  }

  // Moves jump points outside the guard onto g = 0.  Returns false when a
  // projection fails.
  bool project(Vec& z) const {
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const GuardSpec& g = steps_[i].tr->guard;
      Vec p = point(z, i);
      if (eval_guard(g, t_, p) > 0.0) {
        auto q = project_to_guard(g, t_, p);
        if (!q) return false;
        p = *q;
      }
      z.segment(offsets_[i], p.size()) = p;
    }
    return true;
  }

  // Path length with straight segments; +inf when infeasible.
  double value(Vec& z) const {
    try {
      if (!project(z)) return kInf;
      double len = 0.0;
      ModeId mode = a_.mode;
      Vec start = a_.x;
      for (std::size_t i = 0; i < steps_.size(); ++i) {
        const Transition& tr = *steps_[i].tr;
        const Vec p = point(z, i);
        if (!jump_point_ok(sys_, tr, t_, p, guard_tol_)) return kInf;
        const Vec rp = eval_reset(tr.reset, t_, p);
        const Vec& end = steps_[i].reversed ? rp : p;
        len += vector_norm(end - start, sys_.mode(mode).norm);
        if (steps_[i].reversed) {
          mode = tr.guard.source;
          start = p;
        } else {
          mode = tr.guard.target;
          start = rp;
        }
      }
      len += vector_norm(b_.x - start, sys_.mode(mode).norm);
      return std::isfinite(len) ? len : kInf;
    } catch (const EvaluationError&) {
      return kInf;
    }
  }

  PathCandidate path(const Vec& z) const {
    PathCandidate p;
    p.t = t_;
    PathSegment seg{a_.mode, {a_.x}};
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const Transition& tr = *steps_[i].tr;
      const Vec x = point(z, i);
      const Vec rx = eval_reset(tr.reset, t_, x);
      seg.waypoints.push_back(steps_[i].reversed ? rx : x);
      p.segments.push_back(std::move(seg));
      p.jumps.push_back({tr.key(), x, steps_[i].reversed});
      seg = steps_[i].reversed ? PathSegment{tr.guard.source, {x}}
                               : PathSegment{tr.guard.target, {rx}};
    }
    seg.waypoints.push_back(b_.x);
    p.segments.push_back(std::move(seg));
    return p;
  }

 private:
  const HybridSystemSpec& sys_;
  const HybridState& a_;
  const HybridState& b_;
  double t_;
  std::vector<Step> steps_;
  double guard_tol_;
  std::vector<int> offsets_;
  int size_{0};
};

struct DescentResult {
  Vec z;
  double value{kInf};
  bool converged{true};
};

DescentResult descend(const SequenceObjective& obj, Vec z, const DistanceOptions& opt,
                      double initial_step) {
  DescentResult r;
  r.value = obj.value(z);
  r.z = z;
  if (!std::isfinite(r.value) || obj.size() == 0) return r;
  const int n = obj.size();
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (n <= 8) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (double si : {1.0, -1.0}) {
          for (double sj : {1.0, -1.0}) {
            Vec e = Vec::Zero(n);
            e(i) = si * M_SQRT1_2;
            e(j) = sj * M_SQRT1_2;
            dirs.push_back(e);
          }
        }
      }
    }
  }
  double step = initial_step;
  int it = 0;
  while (step > opt.step_tol) {
    bool improved = false;
    for (const Vec& d : dirs) {
      if (++it > opt.max_iterations) {
        r.converged = false;
        return r;
      }
      Vec trial = r.z + step * d;
      const double v = obj.value(trial);
      if (v < r.value) {
        r.value = v;
        r.z = trial;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return r;
}

void enumerate(const HybridSystemSpec& sys, const ModeId& at, const ModeId& goal, int depth,
               std::vector<Step>& cur, std::vector<std::vector<Step>>& out) {
  if (!cur.empty() && at == goal) out.push_back(cur);
  if (static_cast<int>(cur.size()) >= depth) return;
  for (const Transition& tr : sys.transitions) {
    if (tr.guard.source == at) {
      cur.push_back({&tr, false});
      enumerate(sys, tr.guard.target, goal, depth, cur, out);
      cur.pop_back();
    }
    if (tr.guard.target == at) {
      cur.push_back({&tr, true});
      enumerate(sys, tr.guard.source, goal, depth, cur, out);
      cur.pop_back();
    }
  }
}

bool straight_line_is_exact(const HybridSystemSpec& sys, const ModeId& mode) {
  bool incident = false;
  bool all_identity = true;
  for (const Transition& tr : sys.transitions) {
    if (tr.guard.source == mode || tr.guard.target == mode) incident = true;
    if (!tr.reset.identity ||
        !(sys.mode(tr.guard.source).norm == sys.mode(tr.guard.target).norm)) {
      all_identity = false;
    }
  }
  return !incident || all_identity;
}

bool straight_in_domain(const ModeSpec& mode, double t, const Vec& a, const Vec& b) {
  if (!mode.domain) return true;
  for (int k = 0; k <= 16; ++k) {
    const double s = k / 16.0;
    if (!in_domain(mode, t, (1.0 - s) * a + s * b)) return false;
  }
  return true;
}

std::vector<Step> steps_of(const HybridSystemSpec& sys, const PathCandidate& p) {
  std::vector<Step> steps;
  for (const PathJump& j : p.jumps) steps.push_back({&sys.transition(j.key), j.reversed});
  return steps;
}

}  // namespace

std::string to_string(Exactness e) {
  return e == Exactness::kExact ? "exact" : "optimized_upper_bound";
}

void check_path(const PathCandidate& path, const HybridSystemSpec& sys, double guard_tol) {
  if (path.segments.empty()) throw Error("path has no segments");
  if (path.jumps.size() + 1 != path.segments.size()) {
    throw Error("path needs one jump between consecutive segments");
  }
  for (std::size_t i = 0; i < path.segments.size(); ++i) {
    const PathSegment& s = path.segments[i];
    const ModeSpec& m = sys.mode(s.mode);
    if (s.waypoints.empty()) throw Error("segment " + std::to_string(i) + " has no waypoints");
    for (const Vec& w : s.waypoints) {
      if (w.size() != m.dim) {
        throw DimensionError("segment " + std::to_string(i) + " waypoint has dimension " +
                             std::to_string(w.size()) + ", mode '" + m.id.name + "' has " +
                             std::to_string(m.dim));
      }
    }
  }
  for (std::size_t i = 0; i < path.jumps.size(); ++i) {
    const PathJump& j = path.jumps[i];
    const Transition& tr = sys.transition(j.key);
    const ModeId& from = j.reversed ? j.key.target : j.key.source;
    const ModeId& to = j.reversed ? j.key.source : j.key.target;
    if (path.segments[i].mode != from || path.segments[i + 1].mode != to) {
      throw Error("jump " + std::to_string(i) + " (" + j.key.to_string() +
                  ") does not link the modes of its segments");
    }
    if (j.x.size() != sys.mode(j.key.source).dim) {
      throw DimensionError("jump " + std::to_string(i) + " point has wrong dimension");
    }
    const double g = eval_guard(tr.guard, path.t, j.x);
    if (g > guard_tol * scale_of(j.x) || !guard_enabled(tr.guard, path.t, j.x)) {
      throw OffGuardError("jump " + std::to_string(i) + " point " + format_point(path.t, j.x) +
                          " is not in guard " + j.key.to_string());
    }
    const Vec rx = eval_reset(tr.reset, path.t, j.x);
    const Vec& leave = j.reversed ? rx : j.x;
    const Vec& enter = j.reversed ? j.x : rx;
    if (!near(path.segments[i].waypoints.back(), leave, 1e-9) ||
        !near(path.segments[i + 1].waypoints.front(), enter, 1e-9)) {
      throw Error("jump " + std::to_string(i) + " does not connect its segments");
    }
  }
}

double path_length(const PathCandidate& path, const HybridSystemSpec& sys, double guard_tol) {
  check_path(path, sys, guard_tol);
  double len = 0.0;
  for (const PathSegment& s : path.segments) {
    const NormSpec& n = sys.mode(s.mode).norm;
    for (std::size_t k = 1; k < s.waypoints.size(); ++k) {
      len += vector_norm(s.waypoints[k] - s.waypoints[k - 1], n);
    }
  }
  return len;
}

PathCandidate concatenate(const PathCandidate& ab, const PathCandidate& bc) {
  if (ab.segments.empty() || bc.segments.empty()) throw Error("cannot concatenate empty paths");
  const PathSegment& last = ab.segments.back();
  const PathSegment& first = bc.segments.front();
  if (last.mode != first.mode || !near(last.waypoints.back(), first.waypoints.front(), 1e-12)) {
    throw Error("paths do not meet: end of the first differs from start of the second");
  }
  PathCandidate out = ab;
  PathSegment& joint = out.segments.back();
  joint.waypoints.insert(joint.waypoints.end(), first.waypoints.begin() + 1,
                         first.waypoints.end());
  out.segments.insert(out.segments.end(), bc.segments.begin() + 1, bc.segments.end());
  out.jumps.insert(out.jumps.end(), bc.jumps.begin(), bc.jumps.end());
  return out;
}

DistanceEstimate distance(const HybridSystemSpec& sys, const HybridState& a, const HybridState& b,
                          double t, const DistanceOptions& options) {
  if (a.t != t || b.t != t) throw Error("distance requires both states at the evaluation time");
  const ModeSpec& ma = sys.mode(a.mode);
  const ModeSpec& mb = sys.mode(b.mode);
  if (a.x.size() != ma.dim || b.x.size() != mb.dim) {
    throw DimensionError("distance: state dimension does not match its mode");
  }
  DistanceEstimate best;
  best.value = kInf;
  best.reachable = false;
  auto straight = [&]() {
    PathCandidate p;
    p.t = t;
    p.segments.push_back({a.mode, {a.x, b.x}});
    return p;
  };
  if (a.mode == b.mode) {
    const double d = vector_norm(b.x - a.x, ma.norm);
    best.value = d;
    best.reachable = true;
    best.path = straight();
    if (d == 0.0 || (straight_line_is_exact(sys, a.mode) &&
                     straight_in_domain(ma, t, a.x, b.x))) {
      best.exactness = Exactness::kExact;
      return best;
    }
  }

  std::vector<std::vector<Step>> sequences;
  std::vector<Step> cur;
  enumerate(sys, a.mode, b.mode, options.depth, cur, sequences);
  if (options.warm_start) {
    check_path(*options.warm_start, sys, options.guard_tol);
    if (options.warm_start->segments.front().mode != a.mode ||
        options.warm_start->segments.back().mode != b.mode) {
      throw Error("warm start path connects different modes");
    }
  }

  std::mt19937_64 rng(options.seed);
  const int restarts = std::max(8, options.restarts);
  auto consider = [&](const SequenceObjective& obj, const DescentResult& r) {
    if (r.value < best.value) {
      best.value = r.value;
      best.path = obj.path(r.z);
      best.reachable = true;
      best.converged = r.converged;
      best.exactness = Exactness::kOptimizedUpperBound;
    }
  };

  for (const auto& seq : sequences) {
    ++best.sequences_tried;
    SequenceObjective obj(sys, a, b, t, seq, options.guard_tol);
    // Anchor points for the jump points of each restart.
    const double spread =
        1.0 + (a.x.size() == b.x.size() && a.x.size() ? (a.x - b.x).lpNorm<Eigen::Infinity>()
                                                        : 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r < restarts; ++r) {
      Vec z(obj.size());
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const ModeSpec& src = sys.mode(seq[i].tr->guard.source);
        Vec p;
        if (r == 0 && a.x.size() == src.dim) {
          p = a.x;
        } else if (r == 1 && b.x.size() == src.dim) {
          p = b.x;
        } else if (r == 2 && a.x.size() == src.dim && b.x.size() == src.dim) {
          p = 0.5 * (a.x + b.x);
        } else if (r == 3 && src.region) {
          p = src.region->center();
        } else {
          Vec base = Vec::Zero(src.dim);
          if (a.x.size() == src.dim) base = a.x;
          else if (b.x.size() == src.dim) base = b.x;
          else if (src.region) base = src.region->center();
          p = base;
          for (Eigen::Index k = 0; k < p.size(); ++k) p(k) += spread * normal(rng);
        }
        int off = 0;
        for (std::size_t k = 0; k < i; ++k) off += sys.mode(seq[k].tr->guard.source).dim;
        z.segment(off, src.dim) = p;
      }
      consider(obj, descend(obj, z, options, 0.25 * spread));
    }
  }

  if (options.warm_start) {
    const PathCandidate& w = *options.warm_start;
    const double warm_len = path_length(w, sys, options.guard_tol);
    SequenceObjective obj(sys, a, b, t, steps_of(sys, w), options.guard_tol);
    Vec z(obj.size());
    int off = 0;
    for (const PathJump& j : w.jumps) {
      z.segment(off, j.x.size()) = j.x;
      off += static_cast<int>(j.x.size());
    }
    DescentResult r = descend(obj, z, options, 1e-3);
    if (!(r.value <= warm_len)) {
      // Straightening the segments never lengthens a path; fall back to the
      // warm path itself if evaluation differs.
      if (warm_len < best.value) {
        best.value = warm_len;
        best.path = w;
        best.reachable = true;
        best.exactness = Exactness::kOptimizedUpperBound;
      }
    } else {
      consider(obj, r);
    }
  }
  return best;
}

}  // namespace hycon
