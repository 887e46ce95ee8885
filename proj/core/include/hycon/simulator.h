#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hycon/hybrid_model.h"
#include "hycon/integrator.h"

namespace hycon {

struct TrajectoryArc {
  ModeId mode;
  double t_start{0.0};
  double t_end{0.0};
  // Accepted steps; the last one may extend past t_end when the arc was cut
  // by an event, its interpolant is only used on [t_start, t_end].
  std::vector<DenseStep> steps;
  Vec x_start;
  Vec x_end;  // state at t_end^- (pre-reset state when an event follows)

  Vec eval(double t) const;
  // Step boundaries inside the arc, including both ends.
  std::vector<std::pair<double, Vec>> samples() const;
};

struct ResetEvent {
  double t{0.0};
  TransitionKey key;
  Vec x_minus;
  Vec x_plus;
  double g_value{0.0};
  // D_t g + D_x g F_j at (t, x_minus).
  double transversality{0.0};
  // True when the state was already inside the guard (initial condition or
  // re-entry right after a previous reset) rather than crossing into it.
  bool immediate{false};
};

enum class TrajectoryStatus { kCompleted, kZenoCutoff, kEvaluatorError };
std::string to_string(TrajectoryStatus status);

struct HybridTrajectory {
  HybridState initial;
  HybridState final_state;
  std::vector<TrajectoryArc> arcs;
  std::vector<ResetEvent> events;
  TrajectoryStatus status{TrajectoryStatus::kCompleted};
  std::string message;

  // Right-continuous state at time t in [initial.t, final_state.t].
  HybridState state_at(double t) const;
};

enum class IntegrationMethod { kDopri5, kRk4 };

struct SimulationOptions {
  IntegrationMethod method{IntegrationMethod::kDopri5};
  IntegratorOptions integrator{1e-10, 1e-10, 0.1, 0.0, 1e-14};
  double rk4_step{1e-3};
  // Root refinement: |g| <= guard_tol (1 + |x|) and bracket width
  // <= time_tol (1 + |t|).
  double guard_tol{1e-10};
  double time_tol{1e-12};
  double transversality_tol{1e-10};
  // Extra guard evaluations inside each step (dense output) to catch
  // crossings that enter and leave the guard within one step.
  int interior_checks{3};
};

struct Impact {
  double t{0.0};
  Vec x;
  double transversality{0.0};
};

// First crossing of g <= 0 along the flow of `mode` in [t0, t0 + horizon].
// Requires g(t0, x0) > 0.  Throws GrazingError on tangential contact.
std::optional<Impact> time_of_impact(const ModeSpec& mode, const GuardSpec& guard, double t0,
                                     const Vec& x0, double horizon,
                                     const SimulationOptions& options = {});

// Throws GrazingError; evaluator failures end the trajectory with status
// kEvaluatorError.
HybridTrajectory simulate(const HybridSystemSpec& sys, const HybridState& init, double t_end,
                          const SimulationOptions& options = {});

}  // namespace hycon
