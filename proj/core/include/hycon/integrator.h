#pragma once

#include <functional>
#include <limits>

#include "hycon/types.h"

namespace hycon {

using OdeRhs = std::function<Vec(double t, const Vec& x)>;

struct IntegratorOptions {
  double rtol{1e-10};
  double atol{1e-10};
  double max_step{std::numeric_limits<double>::infinity()};
  double initial_step{0.0};  // 0 selects automatically
  double min_step{1e-14};
};

// One accepted Dormand-Prince step with its 4th-order continuous extension.
struct DenseStep {
  double t0{0.0};
  double h{0.0};
  Vec x0;
  Vec x1;
  Vec k1;  // f(t0, x0)
  Vec r2, r3, r4, r5;

  double t1() const { return t0 + h; }
  Vec eval(double t) const;
};

// Adaptive Dormand-Prince 5(4) stepper with FSAL and dense output.
class Dopri5Stepper {
 public:
  Dopri5Stepper(OdeRhs f, double t0, Vec x0, IntegratorOptions options);

  // Advance by one accepted step that does not pass t_limit.
  DenseStep step(double t_limit);

  double t() const { return t_; }
  const Vec& x() const { return x_; }

  // Single explicit DOPRI step of size h from (t, x) without error control,
  // giving the 5th-order solution.  Used for event refinement so that event
  // states lie on the same one-step map as accepted steps.
  static Vec single_step(const OdeRhs& f, double t, const Vec& x, const Vec& k1, double h);

 private:
  double initial_step(double t_limit);

  OdeRhs f_;
  double t_;
  Vec x_;
  Vec k1_;
  double h_{0.0};
  IntegratorOptions opt_;
};

// Integrate to t1 storing every dense step.
std::vector<DenseStep> integrate_dense(const OdeRhs& f, double t0, const Vec& x0, double t1,
                                       const IntegratorOptions& options);

// One classical RK4 step packaged with cubic Hermite dense output.
DenseStep rk4_dense_step(const OdeRhs& f, double t, const Vec& x, const Vec& k1, double h);

// Classical fixed-step RK4, the reference integrator for oracle comparisons.
Vec rk4_integrate(const OdeRhs& f, double t0, const Vec& x0, double t1, int steps);

}  // namespace hycon
