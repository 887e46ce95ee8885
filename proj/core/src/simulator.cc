#include "hycon/simulator.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

#include "hycon/errors.h"

namespace hycon {
namespace {

struct GuardWatch {
  const GuardSpec* guard{nullptr};
  bool armed{false};
};

struct Crossing {
  std::size_t index{0};
  double t{0.0};
  Vec x;
  double g{0.0};
  double transversality{0.0};
};

struct ArcOutcome {
  TrajectoryArc arc;
  std::optional<Crossing> crossing;
};

double transversality_at(const ModeSpec& mode, const GuardSpec& guard, double t, const Vec& x,
                         double* field_norm = nullptr) {
  const Vec f = eval_field(mode, t, x);
  if (field_norm != nullptr) *field_norm = f.size() == 0 ? 0.0 : f.norm();
  double v = guard_time_derivative(guard, t, x);
  if (x.size() > 0) v += guard_gradient(guard, t, x).dot(f);
  return v;
}

// Illinois false position on [lo, hi] with F(lo) > 0 >= F(hi), run until the
// bracket is below the time tolerance and |F(hi)| below the guard tolerance.
// Returns the right end of the final bracket, so the result satisfies F <= 0.
double refine_crossing(const std::function<double(double, Vec*)>& F, double lo, double f_lo,
                       double hi, double f_hi, const SimulationOptions& opt) {
  int side = 0;
  Vec x;
  for (int it = 0; it < 200; ++it) {
    const double ttol = opt.time_tol * (1.0 + std::abs(hi));
    if (hi - lo <= ttol) break;
    double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(mid > lo && mid < hi) || it % 8 == 7) mid = 0.5 * (lo + hi);
    const double fm = F(mid, &x);
    const double gtol = opt.guard_tol * (1.0 + (x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0));
    if (fm <= 0.0) {
      hi = mid;
      f_hi = fm;
      if (side == -1) f_lo *= 0.5;
      side = -1;
      if (-fm <= gtol && hi - lo <= 1e3 * ttol) {
        // Close the bracket by bisection so flat crossings are localized.
        while (hi - lo > ttol) {
          const double m2 = 0.5 * (lo + hi);
          const double f2 = F(m2, &x);
          (f2 <= 0.0 ? hi : lo) = m2;
        }
        break;
      }
    } else {
      lo = mid;
      f_lo = fm;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    }
  }
  return hi;
}

ArcOutcome run_arc(const ModeSpec& mode, std::vector<GuardWatch>& watches, double t0,
                   const Vec& x0, double t_end, const SimulationOptions& opt) {
  ArcOutcome out;
  out.arc.mode = mode.id;
  out.arc.t_start = t0;
  out.arc.x_start = x0;
  const OdeRhs f = [&mode](double t, const Vec& x) { return eval_field(mode, t, x); };

  std::optional<Dopri5Stepper> stepper;
  IntegratorOptions iopt = opt.integrator;
  if (opt.method == IntegrationMethod::kDopri5) stepper.emplace(f, t0, x0, iopt);
  double t = t0;
  Vec x = x0;
  Vec k1 = opt.method == IntegrationMethod::kRk4 ? f(t0, x0) : Vec();

  auto one_step_map = [&](const DenseStep& d, double tau) -> Vec {
    const double h = tau - d.t0;
    if (h == 0.0) return d.x0;
    if (tau == d.t1()) return d.x1;
    if (opt.method == IntegrationMethod::kDopri5) {
      return Dopri5Stepper::single_step(f, d.t0, d.x0, d.k1, h);
    }
    return rk4_dense_step(f, d.t0, d.x0, d.k1, h).x1;
  };

  while (t < t_end) {
    DenseStep d;
    if (stepper) {
      d = stepper->step(t_end);
    } else {
      double h = std::min(opt.rk4_step, t_end - t);
      if (t_end - (t + h) < 1e-9 * h) h = t_end - t;
      d = rk4_dense_step(f, t, x, k1, h);
      k1 = f(d.t1(), d.x1);
    }
    const double t1 = (d.t1() >= t_end || t_end - d.t1() <= 1e-15 * std::abs(t_end)) ? t_end
                                                                                        : d.t1();

    std::vector<Crossing> candidates;
    for (std::size_t i = 0; i < watches.size(); ++i) {
      GuardWatch& w = watches[i];
      if (!w.armed) {
        if (eval_guard(*w.guard, t1, d.x1) > 0.0) w.armed = true;
        continue;
      }
      const int m = std::max(0, opt.interior_checks);
      double prev_t = d.t0;
      double prev_g = std::numeric_limits<double>::quiet_NaN();
      for (int k = 1; k <= m + 1; ++k) {
        const double s = (k == m + 1) ? t1 : d.t0 + d.h * k / (m + 1);
        if (s > t1) break;
        const Vec xs = (k == m + 1) ? d.x1 : d.eval(s);
        const double gs = eval_guard(*w.guard, s, xs);
        if (gs > 0.0) {
          prev_t = s;
          prev_g = gs;
          continue;
        }
        // Confirm on the one-step map, which is what the refinement uses.
        const Vec xr = one_step_map(d, s);
        const double gr = eval_guard(*w.guard, s, xr);
        if (gr > 0.0) {
          prev_t = s;
          prev_g = gr;
          continue;
        }
        double lo = prev_t;
        double f_lo = prev_g;
        if (lo == d.t0 || std::isnan(f_lo)) {
          lo = d.t0;
          f_lo = eval_guard(*w.guard, d.t0, d.x0);
        } else {
          f_lo = eval_guard(*w.guard, lo, one_step_map(d, lo));
          if (!(f_lo > 0.0)) {
            lo = d.t0;
            f_lo = eval_guard(*w.guard, d.t0, d.x0);
          }
        }
        if (!(f_lo > 0.0)) break;
        auto F = [&](double tau, Vec* xo) {
          *xo = one_step_map(d, tau);
          return eval_guard(*w.guard, tau, *xo);
        };
        const double tau = refine_crossing(F, lo, f_lo, s, gr, opt);
        Crossing c;
        c.index = i;
        c.t = tau;
        c.x = one_step_map(d, tau);
        c.g = eval_guard(*w.guard, tau, c.x);
        candidates.push_back(std::move(c));
        break;
      }
    }

    // Earliest crossing; ties within the time tolerance go to the most
    // negative g, then to the lexicographically first transition.
    while (!candidates.empty()) {
      double t_star = std::numeric_limits<double>::infinity();
      for (const auto& c : candidates) t_star = std::min(t_star, c.t);
      const double ttol = opt.time_tol * (1.0 + std::abs(t_star));
      std::size_t best = candidates.size();
      double best_g = std::numeric_limits<double>::infinity();
      Vec x_star;
      for (const auto& c : candidates) {
        if (c.t == t_star) x_star = c.x;
      }
      for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        if (candidates[ci].t > t_star + ttol) continue;
        const double gv = eval_guard(*watches[candidates[ci].index].guard, t_star, x_star);
        if (gv < best_g) {
          best_g = gv;
          best = ci;
        }
      }
      Crossing chosen = candidates[best];
      chosen.t = t_star;
      chosen.x = x_star;
      chosen.g = best_g;
      const GuardSpec& guard = *watches[chosen.index].guard;
      if (!guard_enabled(guard, t_star, x_star)) {
        watches[chosen.index].armed = false;
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
        continue;
      }
      double fnorm = 0.0;
      chosen.transversality = transversality_at(mode, guard, t_star, x_star, &fnorm);
      if (!(chosen.transversality < -opt.transversality_tol * (1.0 + fnorm))) {
        throw GrazingError("grazing contact with guard " + guard.source.name + "->" +
                           guard.target.name + " at " + format_point(t_star, x_star) +
                           " (transversality " + std::to_string(chosen.transversality) + ")");
      }
      out.arc.steps.push_back(std::move(d));
      out.arc.t_end = t_star;
      out.arc.x_end = x_star;
      out.crossing = std::move(chosen);
      return out;
    }

    t = t1;
    x = d.x1;
    out.arc.steps.push_back(std::move(d));
  }
  out.arc.t_end = t;
  out.arc.x_end = x;
  return out;
}

}  // namespace

std::string to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::kCompleted:
      return "completed";
    case TrajectoryStatus::kZenoCutoff:
      return "zeno_cutoff";
    case TrajectoryStatus::kEvaluatorError:
      return "evaluator_error";
  }
  return "?";
}

Vec TrajectoryArc::eval(double t) const {
  if (t <= t_start) return x_start;
  if (t >= t_end) return x_end;
  auto it = std::upper_bound(steps.begin(), steps.end(), t,
                             [](double v, const DenseStep& s) { return v < s.t0; });
  if (it == steps.begin()) return x_start;
  --it;
  return it->eval(t);
}

std::vector<std::pair<double, Vec>> TrajectoryArc::samples() const {
  std::vector<std::pair<double, Vec>> out;
  out.emplace_back(t_start, x_start);
  for (const auto& s : steps) {
    if (s.t1() < t_end) out.emplace_back(s.t1(), s.x1);
  }
  out.emplace_back(t_end, x_end);
  return out;
}

HybridState HybridTrajectory::state_at(double t) const {
  if (t >= final_state.t) return final_state;
  // Right-continuity: prefer the arc that starts at t.
  for (const auto& arc : arcs) {
    if (t >= arc.t_start && t < arc.t_end) return {arc.mode, arc.eval(t), t};
  }
  if (t <= initial.t) {
    if (!arcs.empty()) return {arcs.front().mode, arcs.front().x_start, t};
    return final_state;
  }
  return final_state;
}

std::optional<Impact> time_of_impact(const ModeSpec& mode, const GuardSpec& guard, double t0,
                                     const Vec& x0, double horizon,
                                     const SimulationOptions& options) {
  if (!(eval_guard(guard, t0, x0) > 0.0)) {
    throw Error("time_of_impact requires g(t0, x0) > 0");
  }
  std::vector<GuardWatch> watches{{&guard, true}};
  ArcOutcome out = run_arc(mode, watches, t0, x0, t0 + horizon, options);
  if (!out.crossing) return std::nullopt;
  return Impact{out.crossing->t, out.crossing->x, out.crossing->transversality};
}

HybridTrajectory simulate(const HybridSystemSpec& sys, const HybridState& init, double t_end,
                          const SimulationOptions& options) {
  HybridTrajectory traj;
  traj.initial = init;
  const ModeSpec& m0 = sys.mode(init.mode);
  if (init.x.size() != m0.dim) {
    throw DimensionError("initial state has " + std::to_string(init.x.size()) +
                         " components, mode '" + m0.id.name + "' has dimension " +
                         std::to_string(m0.dim));
  }
  if (t_end < init.t) throw Error("t_end precedes the initial time");

  HybridState state = init;
  std::deque<double> recent;
  auto record_event = [&](ResetEvent ev) -> bool {
    recent.push_back(ev.t);
    while (!recent.empty() && recent.front() < ev.t - 1.0) recent.pop_front();
    traj.events.push_back(std::move(ev));
    if (static_cast<int>(recent.size()) > sys.max_events_per_unit_time) {
      traj.status = TrajectoryStatus::kZenoCutoff;
      traj.message = "more than " + std::to_string(sys.max_events_per_unit_time) +
                     " events within one time unit ending at t=" +
                     std::to_string(traj.events.back().t);
      return false;
    }
    return true;
  };

  try {
    for (;;) {
      const ModeSpec& mode = sys.mode(state.mode);
      const auto outs = sys.outgoing(state.mode);

      // Guard re-entry at the start of an arc: the most negative enabled g
      // fires, ties broken by the (source, target) order of `outs`.  On the
      // guard boundary only a flow pointing into the guard fires.
      const Transition* fire = nullptr;
      double fire_g = 0.0;
      const double boundary = options.guard_tol * (1.0 + state.x.lpNorm<Eigen::Infinity>());
      for (const Transition* tr : outs) {
        const double g = eval_guard(tr->guard, state.t, state.x);
        if (g > 0.0) continue;
        if (g >= -boundary && transversality_at(mode, tr->guard, state.t, state.x) >= 0.0) continue;
        if ((fire == nullptr || g < fire_g) && guard_enabled(tr->guard, state.t, state.x)) {
          fire = tr;
          fire_g = g;
        }
      }
      if (fire != nullptr) {
        ResetEvent ev;
        ev.t = state.t;
        ev.key = fire->key();
        ev.x_minus = state.x;
        ev.g_value = fire_g;
        ev.transversality = transversality_at(mode, fire->guard, state.t, state.x);
        ev.x_plus = eval_reset(fire->reset, state.t, state.x);
        ev.immediate = true;
        const ModeSpec& target = sys.mode(fire->guard.target);
        if (ev.x_plus.size() != target.dim) {
          throw DimensionError("reset " + ev.key.to_string() + " returned " +
                               std::to_string(ev.x_plus.size()) + " components");
        }
        state = {target.id, ev.x_plus, state.t};
        if (!record_event(std::move(ev))) break;
        continue;
      }
      if (state.t >= t_end) break;

      std::vector<GuardWatch> watches;
      for (const Transition* tr : outs) {
        watches.push_back({&tr->guard, eval_guard(tr->guard, state.t, state.x) > 0.0});
      }
      ArcOutcome arc = run_arc(mode, watches, state.t, state.x, t_end, options);
      if (!arc.crossing) {
        state = {mode.id, arc.arc.x_end, arc.arc.t_end};
        traj.arcs.push_back(std::move(arc.arc));
        continue;
      }
      const Crossing& c = *arc.crossing;
      const Transition& tr = *outs[c.index];
      ResetEvent ev;
      ev.t = c.t;
      ev.key = tr.key();
      ev.x_minus = c.x;
      ev.g_value = c.g;
      ev.transversality = c.transversality;
      ev.x_plus = eval_reset(tr.reset, c.t, c.x);
      const ModeSpec& target = sys.mode(tr.guard.target);
      if (ev.x_plus.size() != target.dim) {
        throw DimensionError("reset " + ev.key.to_string() + " returned " +
                             std::to_string(ev.x_plus.size()) + " components");
      }
      traj.arcs.push_back(std::move(arc.arc));
      state = {target.id, ev.x_plus, c.t};
      if (!record_event(std::move(ev))) break;
    }
  } catch (const EvaluationError& e) {
    traj.status = TrajectoryStatus::kEvaluatorError;
    traj.message = e.what();
  }
  traj.final_state = state;
  return traj;
}

}  // namespace hycon
