#include "hycon/variational.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hycon/errors.h"

namespace hycon {
namespace {

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

bool same_sequence(const HybridTrajectory& a, const HybridTrajectory& b) {
  if (a.status != TrajectoryStatus::kCompleted || b.status != TrajectoryStatus::kCompleted) {
    return false;
  }
  if (a.events.size() != b.events.size()) return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    if (a.events[i].key != b.events[i].key) return false;
    if (a.events[i].immediate != b.events[i].immediate) return false;
  }
  return a.final_state.mode == b.final_state.mode;
}

std::string describe_sequence(const HybridTrajectory& tr) {
  std::string s = "[";
  for (std::size_t i = 0; i < tr.events.size(); ++i) {
    if (i) s += ", ";
    s += tr.events[i].key.to_string();
  }
  return s + "]";
}

Mat invert(const Mat& m, const std::string& what) {
  if (m.rows() == 0) return Mat(0, 0);
  Eigen::FullPivLU<Mat> lu(m);
  if (!lu.isInvertible()) throw RankDeficiencyError(what + " is singular");
  return lu.inverse();
}

}  // namespace

Mat saltation_from_parts(const SaltationParts& p) {
  const Vec num = p.field_target - p.dx_reset * p.field_source - p.dt_reset;
  return p.dx_reset + num * p.dx_guard.transpose() / p.denominator;
}

SaltationRecord saltation(const HybridSystemSpec& sys, const TransitionKey& key, double t,
                          const Vec& x, const SaltationOptions& options) {
  const Transition& tr = sys.transition(key);
  const ModeSpec& src = sys.mode(key.source);
  const ModeSpec& dst = sys.mode(key.target);
  if (x.size() != src.dim) {
    throw DimensionError("saltation point has " + std::to_string(x.size()) +
                         " components, mode '" + src.id.name + "' has dimension " +
                         std::to_string(src.dim));
  }
  const double g = eval_guard(tr.guard, t, x);
  const double xn = x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0;
  if (std::abs(g) > options.guard_tol * (1.0 + xn)) {
    throw OffGuardError("point " + format_point(t, x) + " is off guard " + key.to_string() +
                        " (g = " + std::to_string(g) + ")");
  }
  SaltationRecord rec;
  SaltationParts& p = rec.parts;
  p.field_source = eval_field(src, t, x);
  const Vec xp = eval_reset(tr.reset, t, x);
  p.field_target = eval_field(dst, t, xp);
  p.dx_reset = reset_jacobian(tr.reset, t, x);
  p.dt_reset = reset_time_derivative(tr.reset, t, x);
  p.dx_guard = guard_gradient(tr.guard, t, x);
  p.dt_guard = guard_time_derivative(tr.guard, t, x);
  p.denominator = p.dt_guard + (x.size() ? p.dx_guard.dot(p.field_source) : 0.0);
  const double fn = p.field_source.size() ? p.field_source.norm() : 0.0;
  if (!(p.denominator < -options.transversality_tol * (1.0 + fn))) {
    throw TransversalityError("transversality fails at " + format_point(t, x) + " on " +
                              key.to_string() + " (D_t g + D_x g F = " +
                              std::to_string(p.denominator) + ")");
  }
  rec.xi = saltation_from_parts(p);
  const InducedNorm n = induced_norm_ex(rec.xi, src.norm, dst.norm);
  rec.induced_norm = n.value;
  rec.norm_approximate = n.approximate;
  rec.event.t = t;
  rec.event.key = key;
  rec.event.x_minus = x;
  rec.event.x_plus = xp;
  rec.event.g_value = g;
  rec.event.transversality = p.denominator;
  return rec;
}

Mat propagate_on_arc(const ModeSpec& mode, const TrajectoryArc& arc, double t_from, double t_to,
                     const Mat& w, const VariationalOptions& options) {
  if (t_to <= t_from || mode.dim == 0) return w;
  const Eigen::Index rows = w.rows();
  const Eigen::Index cols = w.cols();
  const OdeRhs rhs = [&](double t, const Vec& v) -> Vec {
    const Mat J = jacobian_of_field(mode, t, arc.eval(t));
    return flatten(J * unflatten(v, rows, cols));
  };
  IntegratorOptions io;
  io.rtol = options.rtol;
  io.atol = options.atol;
  io.max_step = options.simulation.integrator.max_step;
  Dopri5Stepper stepper(rhs, t_from, flatten(w), io);
  while (stepper.t() < t_to) stepper.step(t_to);
  return unflatten(stepper.x(), rows, cols);
}

VariationalSolution variational_solve(const HybridSystemSpec& sys, const HybridState& init,
                                      double t_end, const Mat& w0,
                                      const VariationalOptions& options) {
  const ModeSpec& m0 = sys.mode(init.mode);
  if (w0.rows() != m0.dim) {
    throw DimensionError("w0 has " + std::to_string(w0.rows()) + " rows, mode '" +
                         m0.id.name + "' has dimension " + std::to_string(m0.dim));
  }
  VariationalSolution sol;
  sol.trajectory = simulate(sys, init, t_end, options.simulation);
  if (sol.trajectory.status != TrajectoryStatus::kCompleted) {
    throw EventSequenceError("base trajectory ended with status " +
                             to_string(sol.trajectory.status) + ": " + sol.trajectory.message);
  }
  Mat w = w0;
  std::size_t next_event = 0;
  auto apply_events_until = [&](double t, bool inclusive) {
    while (next_event < sol.trajectory.events.size()) {
      const ResetEvent& ev = sol.trajectory.events[next_event];
      if (ev.t > t || (!inclusive && ev.t == t)) break;
      if (ev.immediate) {
        const Transition& tr = sys.transition(ev.key);
        w = reset_jacobian(tr.reset, ev.t, ev.x_minus) * w;
        SaltationRecord rec;
        rec.event = ev;
        rec.xi = reset_jacobian(tr.reset, ev.t, ev.x_minus);
        rec.induced_norm = induced_norm(rec.xi, sys.mode(ev.key.source).norm,
                                        sys.mode(ev.key.target).norm);
        sol.jumps.push_back(std::move(rec));
      } else {
        SaltationOptions so;
        so.guard_tol = std::max(so.guard_tol, 10.0 * options.simulation.guard_tol);
        SaltationRecord rec = saltation(sys, ev.key, ev.t, ev.x_minus, so);
        rec.event = ev;
        w = rec.xi * w;
        sol.jumps.push_back(std::move(rec));
      }
      ++next_event;
    }
  };
  // Events before the first arc (immediate resets of the initial state).
  for (const TrajectoryArc& arc : sol.trajectory.arcs) {
    apply_events_until(arc.t_start, true);
    if (w.rows() != sys.mode(arc.mode).dim) {
      throw EventSequenceError("variational state dimension mismatch entering arc in mode '" +
                               arc.mode.name + "'");
    }
    ArcFundamental f;
    f.mode = arc.mode;
    f.t_start = arc.t_start;
    f.t_end = arc.t_end;
    f.w_start = w;
    w = propagate_on_arc(sys.mode(arc.mode), arc, arc.t_start, arc.t_end, w, options);
    f.w_end = w;
    sol.fundamental.push_back(std::move(f));
    // Events at the end of this arc are applied when the next arc starts,
    // or below for the final one.
  }
  apply_events_until(sol.trajectory.final_state.t, true);
  sol.w_final = w;
  return sol;
}

SimulationOptions oracle_simulation_options() {
  SimulationOptions o;
  o.integrator.rtol = 1e-12;
  o.integrator.atol = 1e-12;
  o.integrator.max_step = 0.05;
  o.guard_tol = 1e-13;
  o.time_tol = 1e-15;
  return o;
}

FlowJacobianFd flow_jacobian_fd(const HybridSystemSpec& sys, const HybridState& init,
                                double t_end, double h, const SimulationOptions& options) {
  const HybridTrajectory base = simulate(sys, init, t_end, options);
  if (base.status != TrajectoryStatus::kCompleted) {
    throw EventSequenceError("base trajectory ended with status " + to_string(base.status));
  }
  const int n = static_cast<int>(init.x.size());
  const int m = sys.mode(base.final_state.mode).dim;
  FlowJacobianFd out;
  out.jacobian = Mat::Zero(m, n);
  for (int i = 0; i < n; ++i) {
    const double hi = h * (1.0 + std::abs(init.x(i)));
    HybridState plus = init;
    HybridState minus = init;
    plus.x(i) += hi;
    minus.x(i) -= hi;
    const HybridTrajectory tp = simulate(sys, plus, t_end, options);
    const HybridTrajectory tm = simulate(sys, minus, t_end, options);
    const bool ok_p = same_sequence(base, tp);
    const bool ok_m = same_sequence(base, tm);
    if (ok_p && ok_m) {
      out.jacobian.col(i) = (tp.final_state.x - tm.final_state.x) / (2.0 * hi);
    } else if (ok_p) {
      out.jacobian.col(i) = (tp.final_state.x - base.final_state.x) / hi;
      out.one_sided = true;
    } else if (ok_m) {
      out.jacobian.col(i) = (base.final_state.x - tm.final_state.x) / hi;
      out.one_sided = true;
    } else {
      throw EventSequenceError("perturbing component " + std::to_string(i) +
                               " changes the event sequence " + describe_sequence(base) +
                               " to " + describe_sequence(tp) + " / " + describe_sequence(tm));
    }
  }
  return out;
}

HybridState state_before_guard(const HybridSystemSpec& sys, const TransitionKey& key, double t,
                               const Vec& x, double delta) {
  const ModeSpec& mode = sys.mode(key.source);
  if (mode.dim == 0 || delta <= 0.0) return {mode.id, x, t - std::max(delta, 0.0)};
  const OdeRhs back = [&](double s, const Vec& y) -> Vec { return -eval_field(mode, t - s, y); };
  IntegratorOptions io;
  io.rtol = 1e-13;
  io.atol = 1e-13;
  io.max_step = delta / 4.0;
  Dopri5Stepper stepper(back, 0.0, x, io);
  while (stepper.t() < delta) stepper.step(delta);
  return {mode.id, stepper.x(), t - delta};
}

SaltationEstimate saltation_fd_oracle(const HybridSystemSpec& sys, const HybridState& init,
                                      double t_window, double h) {
  const SimulationOptions so = oracle_simulation_options();
  const double t_end = init.t + t_window;
  const HybridTrajectory base = simulate(sys, init, t_end, so);
  if (base.status != TrajectoryStatus::kCompleted) {
    throw EventSequenceError("oracle trajectory ended with status " + to_string(base.status));
  }
  if (base.events.size() != 1 || base.events.front().immediate || base.arcs.size() != 2) {
    throw EventSequenceError("oracle window must contain exactly one crossing, found " +
                             describe_sequence(base));
  }
  SaltationEstimate est;
  est.event = base.events.front();
  const FlowJacobianFd d = flow_jacobian_fd(sys, init, t_end, h, so);
  est.one_sided = d.one_sided;
  VariationalOptions vo;
  vo.simulation = so;
  vo.rtol = 1e-12;
  vo.atol = 1e-12;
  const TrajectoryArc& before = base.arcs[0];
  const TrajectoryArc& after = base.arcs[1];
  const ModeSpec& src = sys.mode(before.mode);
  const ModeSpec& dst = sys.mode(after.mode);
  const Mat phi_before = propagate_on_arc(src, before, before.t_start, before.t_end,
                                          Mat::Identity(src.dim, src.dim), vo);
  const Mat phi_after = propagate_on_arc(dst, after, after.t_start, after.t_end,
                                         Mat::Identity(dst.dim, dst.dim), vo);
  est.xi_hat = invert(phi_after, "post-event flow Jacobian") * d.jacobian *
               invert(phi_before, "pre-event flow Jacobian");
  return est;
}

double relative_error(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("relative_error: shape mismatch");
  }
  const double diff = (a - b).norm();
  const double ref = b.norm();
  if (diff == 0.0) return 0.0;
  return diff / std::max(ref, 1e-300);
}

}  // namespace hycon
