#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hycon/norms.h"
#include "hycon/types.h"

namespace hycon {

// Symbolic label of a discrete mode j.
struct ModeId {
  std::string name;

  ModeId() = default;
  ModeId(std::string n) : name(std::move(n)) {}  // NOLINT
  ModeId(const char* n) : name(n) {}              // NOLINT

  auto operator<=>(const ModeId&) const = default;
  bool operator==(const ModeId&) const = default;
};

// (source, target) key of a transition.
struct TransitionKey {
  ModeId source;
  ModeId target;

  auto operator<=>(const TransitionKey&) const = default;
  bool operator==(const TransitionKey&) const = default;
  std::string to_string() const { return source.name + "->" + target.name; }
};

using VectorFn = std::function<Vec(double t, const Vec& x)>;
using MatrixFn = std::function<Mat(double t, const Vec& x)>;
using ScalarFn = std::function<double(double t, const Vec& x)>;
using PredicateFn = std::function<bool(double t, const Vec& x)>;

// Axis-aligned box, used as the default sampling region of a mode.
struct Box {
  Vec lo;
  Vec hi;
  Vec center() const { return 0.5 * (lo + hi); }
};

struct ModeSpec {
  ModeId id;
  int dim{0};
  NormSpec norm;
  VectorFn field;
  MatrixFn jacobian;       // optional; finite differences otherwise
  VectorFn time_partial;   // optional
  // Optional closure of the domain D_j inside R^dim (e.g. q >= 0).  Used by
  // sampling and by the distance estimator; absent means all of R^dim.
  PredicateFn domain;
  // Optional typical region for sampling-based checks.
  std::optional<Box> region;
  std::vector<std::string> state_names;  // x1..xn when empty
};

struct GuardSpec {
  ModeId source;
  ModeId target;
  ScalarFn g;
  VectorFn grad_x;   // optional; finite differences otherwise
  ScalarFn d_t;      // optional; zero (time invariant) otherwise
  // Optional applicability condition folded into the guard, e.g. the
  // touchdown velocity condition q' < 0.  Crossings where it is false are
  // ignored.
  PredicateFn enabled;
};

struct ResetSpec {
  ModeId source;
  ModeId target;
  VectorFn map;
  MatrixFn jac_x;    // optional; finite differences otherwise
  VectorFn d_t;      // optional; zero otherwise
  // Declared identity map between equal-dimensional modes.
  bool identity{false};

  static ResetSpec Identity(const ModeId& source, const ModeId& target, int dim);
};

struct Transition {
  GuardSpec guard;
  ResetSpec reset;
  TransitionKey key() const { return {guard.source, guard.target}; }
};

struct HybridSystemSpec {
  std::string name;
  std::vector<ModeSpec> modes;
  std::vector<Transition> transitions;
  int max_events_per_unit_time{1000};
  // Named parameters of the constructor, recorded for output and for
  // resolving symbolic values on the command line.
  std::map<std::string, double> parameters;

  const ModeSpec& mode(const ModeId& id) const;
  const ModeSpec* find_mode(const ModeId& id) const;
  const Transition& transition(const TransitionKey& key) const;
  const Transition* find_transition(const TransitionKey& key) const;
  // Outgoing transitions of a mode in lexicographic (source, target) order.
  std::vector<const Transition*> outgoing(const ModeId& id) const;
  int max_dim() const;
};

struct HybridState {
  ModeId mode;
  Vec x;
  double t{0.0};
};

struct Diagnostic {
  std::string kind;      // structure, dimension, jacobian, nondegeneracy, ...
  std::string location;  // mode or transition
  std::string message;
};

struct ValidationOptions {
  int samples_per_mode{16};
  unsigned seed{1};
  double jacobian_rel_tol{1e-5};
  double t{0.0};
};

// Structural checks plus sampled-point checks of Jacobians, reset
// dimensions and guard nondegeneracy.  At most one diagnostic per
// (check, location).
std::vector<Diagnostic> validate(const HybridSystemSpec& sys,
                                 const ValidationOptions& options = {});

// Evaluators with the optional-callback fallbacks applied.  Exceptions from
// user callbacks are rethrown as EvaluationError with coordinates attached.
Vec eval_field(const ModeSpec& mode, double t, const Vec& x);
Mat jacobian_of_field(const ModeSpec& mode, double t, const Vec& x);
double eval_guard(const GuardSpec& guard, double t, const Vec& x);
Vec guard_gradient(const GuardSpec& guard, double t, const Vec& x);
double guard_time_derivative(const GuardSpec& guard, double t, const Vec& x);
bool guard_enabled(const GuardSpec& guard, double t, const Vec& x);
Vec eval_reset(const ResetSpec& reset, double t, const Vec& x);
Mat reset_jacobian(const ResetSpec& reset, double t, const Vec& x);
Vec reset_time_derivative(const ResetSpec& reset, double t, const Vec& x);
bool in_domain(const ModeSpec& mode, double t, const Vec& x);

// 4th-order central differences with h = 1e-5 (1 + |x|_inf).
Mat finite_difference_jacobian(const VectorFn& f, double t, const Vec& x,
                               Eigen::Index rows);
Vec finite_difference_gradient(const ScalarFn& f, double t, const Vec& x);

std::string format_point(double t, const Vec& x);

// Newton projection onto g(t, .) = 0 along the gradient; nullopt when the
// gradient vanishes or the iteration does not reach
// |g| <= tol (1 + |x|_inf).
std::optional<Vec> project_to_guard(const GuardSpec& guard, double t, const Vec& x,
                                    double tol = 1e-12, int max_iterations = 50);

}  // namespace hycon
