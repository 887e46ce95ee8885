#pragma once

#include <cstdint>
#include <string>

namespace hycon::testing {

struct PropertyResult {
  bool ok{true};
  int cases{0};
  std::string detail;  // first counterexample, or a short summary
};

// (|I + hA| - 1) / h extrapolated to h = 0 matches mu(A).
PropertyResult prop_measure_limit(std::uint64_t seed, int cases);
// mu(A + cI) = mu(A) + c.
PropertyResult prop_measure_shift(std::uint64_t seed, int cases);
// |MN| <= |M| |N| over exact norm triples.
PropertyResult prop_submultiplicative(std::uint64_t seed, int cases);
// Weighted measure <= 0 iff A^T E + E A is negative semidefinite.
PropertyResult prop_weighted_measure_sign(std::uint64_t seed, int cases);
// |Xi| >= 1 - 1e-9 at sampled guard points of translation-reset systems.
PropertyResult prop_translation_lower_bound(std::uint64_t seed, int cases);
// Delta_J^2 = Delta_J and Da_J Delta_J = 0.
PropertyResult prop_impulse_projection(std::uint64_t seed, int cases);
// W(t2) = Phi(t2, t1) W(t1) on smooth arcs, and across events the
// variational solution matches finite differences of the flow.
PropertyResult prop_variational_chain_rule(std::uint64_t seed, int cases);
// Identical inputs give identical trajectories.
PropertyResult prop_simulator_determinism(std::uint64_t seed, int cases);
// Halving the tolerance moves terminal states of every built-in by less
// than 10 tol (1 + |x|).
PropertyResult prop_tolerance_halving(double tol);

}  // namespace hycon::testing
