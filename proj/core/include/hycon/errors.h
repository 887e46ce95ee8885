#pragma once

#include <stdexcept>
#include <string>

namespace hycon {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A weight matrix that is not symmetric positive definite.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

// An evaluator (field, guard, reset, ...) threw or returned garbage.  The
// message carries the mode and the coordinates at which it happened.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Tangential guard contact during simulation.
class GrazingError : public Error {
 public:
  using Error::Error;
};

// D_t g + D_x g F >= 0 at a point where a saltation matrix was requested.
class TransversalityError : public Error {
 public:
  using Error::Error;
};

// A point handed to a guard-level operation does not satisfy g = 0.
class OffGuardError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration, system definition or expression.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Perturbed trajectories in a finite-difference oracle did not follow the
// same event sequence as the base trajectory.
class EventSequenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace hycon
