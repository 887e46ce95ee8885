#pragma once

#include <functional>
#include <vector>

#include "hycon/hybrid_model.h"

namespace hycon {

// Linear spring-damper network M q'' = u(t) - K q - B q' + Da^T lambda
// under unilateral constraints Da q >= 0.
struct MechanicalNetworkParams {
  Mat M;
  Mat K;
  Mat B;
  Mat Da;  // one row per constraint
  std::function<Vec(double t)> u;
};

// Throws ConfigError unless M, K, B are symmetric positive definite and the
// sizes agree.
void check_network(const MechanicalNetworkParams& p);

// Rows of Da selected by the active set J.
Mat active_rows(const Mat& Da, const std::vector<int>& J);

// Plastic impact map I - M^-1 Da_J^T (Da_J M^-1 Da_J^T)^-1 Da_J; identity for
// empty J.  Throws RankDeficiencyError when Da_J lacks full row rank.
Mat constraint_impulse_map(const Mat& M, const Mat& Da_J);
Mat constraint_impulse_map(const MechanicalNetworkParams& p, const std::vector<int>& J);

// lambda_J = -(Da_J M^-1 Da_J^T)^-1 Da_J M^-1 f.
Vec constraint_multipliers(const Mat& M, const Mat& Da_J, const Vec& f);

// Da_J^T lambda_J with f = u(t) - K q - B dq.
Vec constraint_force(const MechanicalNetworkParams& p, const std::vector<int>& J, double t,
                     const Vec& q, const Vec& dq);

// Mode label of an active set: "free" for the empty set, else "c1_3" etc.
// (1-based constraint indices).
std::string active_set_name(const std::vector<int>& J);

// One mode per active set with state (q, dq) and energy norm diag(K, M).
// Touchdown of constraint j: g = Da_j q, enabled when Da_j dq < 0, reset
// dq -> Delta_{J+j} dq.  Liftoff: g = lambda_j, identity reset.
// At most 6 constraints.
HybridSystemSpec make_mech_network(const MechanicalNetworkParams& p);

}  // namespace hycon
