#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hycon/hybrid_model.h"

namespace hycon {

// Polyline inside one mode; waypoints include both ends.
struct PathSegment {
  ModeId mode;
  std::vector<Vec> waypoints;
};

// Zero-length jump between consecutive segments through the reset of
// `key` at x, a point of the guard in key.source.  A forward jump leaves
// key.source at x and enters key.target at R(t, x); a reversed jump leaves
// key.target at R(t, x) and enters key.source at x.
struct PathJump {
  TransitionKey key;
  Vec x;
  bool reversed{false};
};

struct PathCandidate {
  std::vector<PathSegment> segments;
  std::vector<PathJump> jumps;  // segments.size() - 1 entries
  double t{0.0};
};

enum class Exactness { kExact, kOptimizedUpperBound };
std::string to_string(Exactness e);

struct DistanceEstimate {
  // Upper bound on d_t; +infinity when no connecting sequence was found.
  double value{0.0};
  PathCandidate path;
  Exactness exactness{Exactness::kOptimizedUpperBound};
  bool reachable{true};
  bool converged{true};
  std::size_t sequences_tried{0};
};

struct DistanceOptions {
  // Maximum number of jumps in an enumerated transition sequence.
  int depth{3};
  // Starting points per sequence (at least 8 are used).
  int restarts{8};
  // Coordinate-descent step at which the search stops.
  double step_tol{1e-11};
  int max_iterations{20000};
  // Jump points need g(t, x) <= guard_tol (1 + |x|).
  double guard_tol{1e-8};
  unsigned seed{7};
  // Path whose length (after jump-point optimization) also bounds the
  // result, e.g. a concatenation for triangle-inequality checks.
  std::optional<PathCandidate> warm_start;
};

// Sum of segment polyline lengths in each mode's norm.  Throws Error when
// the path is not smoothly reset-connected at its evaluation time.
double path_length(const PathCandidate& path, const HybridSystemSpec& sys,
                   double guard_tol = 1e-8);

// Throws Error describing the first inconsistency.
void check_path(const PathCandidate& path, const HybridSystemSpec& sys, double guard_tol = 1e-8);

// Requires a.t == b.t == t.
DistanceEstimate distance(const HybridSystemSpec& sys, const HybridState& a,
                          const HybridState& b, double t, const DistanceOptions& options = {});

// Path from the start of ab to the end of bc; the end of ab must equal
// the start of bc.
PathCandidate concatenate(const PathCandidate& ab, const PathCandidate& bc);

}  // namespace hycon
