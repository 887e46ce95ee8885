#pragma once

#include <vector>

#include "hycon/hybrid_model.h"
#include "hycon/simulator.h"

namespace hycon {

// Ingredients of a saltation matrix at one guard point.
struct SaltationParts {
  Mat dx_reset;        // D_x R
  Vec dt_reset;        // D_t R
  Vec field_source;    // F_j(t, x)
  Vec field_target;    // F_j'(t, R(t, x))
  Vec dx_guard;        // D_x g
  double dt_guard{0};  // D_t g
  double denominator{0};  // D_t g + D_x g F_j
};

struct SaltationRecord {
  ResetEvent event;
  Mat xi;
  double induced_norm{0.0};
  bool norm_approximate{false};
  SaltationParts parts;
};

// Xi = D_x R + (F_j' - D_x R F_j - D_t R) D_x g / (D_t g + D_x g F_j).
Mat saltation_from_parts(const SaltationParts& parts);

struct SaltationOptions {
  // Required |g(t, x)| <= guard_tol (1 + |x|).
  double guard_tol{1e-8};
  double transversality_tol{1e-10};
};

// Throws OffGuardError or TransversalityError.
SaltationRecord saltation(const HybridSystemSpec& sys, const TransitionKey& key, double t,
                          const Vec& x, const SaltationOptions& options = {});

// Per-arc fundamental solution: W(t_end) = Phi(t_end, t_start) W(t_start).
struct ArcFundamental {
  ModeId mode;
  double t_start{0.0};
  double t_end{0.0};
  Mat w_start;
  Mat w_end;
};

struct VariationalSolution {
  HybridTrajectory trajectory;
  std::vector<ArcFundamental> fundamental;
  std::vector<SaltationRecord> jumps;
  Mat w_final;
};

struct VariationalOptions {
  SimulationOptions simulation{};
  double rtol{1e-10};
  double atol{1e-10};
};

// Solve W' = D_x F(t, x(t)) W along the stored arc from t_from to t_to
// (both inside the arc).
Mat propagate_on_arc(const ModeSpec& mode, const TrajectoryArc& arc, double t_from, double t_to,
                     const Mat& w, const VariationalOptions& options = {});

// Propagates w0 through arcs and events (W <- Xi W; immediate events use
// W <- D_x R W).  Throws EventSequenceError if the trajectory did not
// complete.
VariationalSolution variational_solve(const HybridSystemSpec& sys, const HybridState& init,
                                      double t_end, const Mat& w0,
                                      const VariationalOptions& options = {});

struct FlowJacobianFd {
  Mat jacobian;
  bool one_sided{false};
};

// Finite-difference D_x phi(t_end, t0, x0) with perturbation h.  Central
// differences when both perturbed trajectories keep the base event
// sequence, one-sided on the side that keeps it otherwise.  Throws
// EventSequenceError when neither side does.
FlowJacobianFd flow_jacobian_fd(const HybridSystemSpec& sys, const HybridState& init,
                                double t_end, double h = 1e-6,
                                const SimulationOptions& options = {});

// Tight tolerances used by the oracles.
SimulationOptions oracle_simulation_options();

// State that reaches (t, x) on the guard of `key` after flowing for
// `delta` in the source mode.
HybridState state_before_guard(const HybridSystemSpec& sys, const TransitionKey& key, double t,
                               const Vec& x, double delta);

struct SaltationEstimate {
  Mat xi_hat;
  ResetEvent event;
  bool one_sided{false};
};

// Empirical saltation matrix Phi_after^-1 D Phi_before^-1 from a
// trajectory with exactly one event in [init.t, init.t + t_window].
SaltationEstimate saltation_fd_oracle(const HybridSystemSpec& sys, const HybridState& init,
                                      double t_window, double h = 1e-6);

// |A - B|_F / max(|B|_F, 1e-300); 0 when both are empty.
double relative_error(const Mat& a, const Mat& b);

}  // namespace hycon
