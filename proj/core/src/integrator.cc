#include "hycon/integrator.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hycon/errors.h"

namespace hycon {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Stages {
  Vec k2, k3, k4, k5, k6, k7;
  Vec x1;
};

Stages stages(const OdeRhs& f, double t, const Vec& x, const Vec& k1, double h,
              bool need_k7) {
  Stages s;
  s.k2 = f(t + c2 * h, x + h * a21 * k1);
  s.k3 = f(t + c3 * h, x + h * (a31 * k1 + a32 * s.k2));
  s.k4 = f(t + c4 * h, x + h * (a41 * k1 + a42 * s.k2 + a43 * s.k3));
  s.k5 = f(t + c5 * h, x + h * (a51 * k1 + a52 * s.k2 + a53 * s.k3 + a54 * s.k4));
  s.k6 = f(t + h, x + h * (a61 * k1 + a62 * s.k2 + a63 * s.k3 + a64 * s.k4 + a65 * s.k5));
  s.x1 = x + h * (a71 * k1 + a73 * s.k3 + a74 * s.k4 + a75 * s.k5 + a76 * s.k6);
  if (need_k7) s.k7 = f(t + h, s.x1);
  return s;
}

double error_norm(const Vec& err, const Vec& x0, const Vec& x1, const IntegratorOptions& o) {
  if (err.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(x0(i)), std::abs(x1(i)));
    const double r = err(i) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

}  // namespace

Vec DenseStep::eval(double t) const {
  if (h == 0.0) return x0;
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return x0 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

Dopri5Stepper::Dopri5Stepper(OdeRhs f, double t0, Vec x0, IntegratorOptions options)
    : f_(std::move(f)), t_(t0), x_(std::move(x0)), opt_(options) {
  k1_ = f_(t_, x_);
}

Vec Dopri5Stepper::single_step(const OdeRhs& f, double t, const Vec& x, const Vec& k1,
                               double h) {
  if (h == 0.0) return x;
  return stages(f, t, x, k1, h, false).x1;
}

double Dopri5Stepper::initial_step(double t_limit) {
  if (opt_.initial_step > 0.0) return opt_.initial_step;
  const double span = t_limit - t_;
  if (x_.size() == 0) return std::min(span, opt_.max_step);
  Vec sc(x_.size());
  for (Eigen::Index i = 0; i < x_.size(); ++i) sc(i) = opt_.atol + opt_.rtol * std::abs(x_(i));
  const double d0 = std::sqrt((x_.array() / sc.array()).square().mean());
  const double d1n = std::sqrt((k1_.array() / sc.array()).square().mean());
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  const Vec x1 = x_ + h0 * k1_;
  const Vec f1 = f_(t_ + h0, x1);
  const double d2 = std::sqrt(((f1 - k1_).array() / sc.array()).square().mean()) / h0;
  double h1 = std::max(d1n, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                         : std::pow(0.01 / std::max(d1n, d2), 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span, opt_.max_step});
}

DenseStep Dopri5Stepper::step(double t_limit) {
  const double span = t_limit - t_;
  if (!(span > 0.0)) throw Error("Dopri5Stepper::step called with no time left");
  if (h_ <= 0.0) h_ = initial_step(t_limit);
  for (;;) {
    double h = std::min({h_, opt_.max_step, span});
    // Avoid leaving a sliver at the end of the interval.
    if (span - h < 1e-3 * h) h = span;
    Stages s = stages(f_, t_, x_, k1_, h, true);
    const Vec err = h * (e1 * k1_ + e3 * s.k3 + e4 * s.k4 + e5 * s.k5 + e6 * s.k6 + e7 * s.k7);
    const double en = error_norm(err, x_, s.x1, opt_);
    if (!std::isfinite(en)) {
      h_ = 0.25 * h;
      if (h_ < opt_.min_step * std::max(1.0, std::abs(t_))) {
        throw Error("integrator step size underflow at t=" + std::to_string(t_));
      }
      continue;
    }
    if (en <= 1.0) {
      DenseStep d;
      d.t0 = t_;
      d.h = h;
      d.x0 = x_;
      d.x1 = s.x1;
      d.k1 = k1_;
      const Vec ydiff = s.x1 - x_;
      const Vec bspl = h * k1_ - ydiff;
      d.r2 = ydiff;
      d.r3 = bspl;
      d.r4 = ydiff - h * s.k7 - bspl;
      d.r5 = h * (d1 * k1_ + d3 * s.k3 + d4 * s.k4 + d5 * s.k5 + d6 * s.k6 + d7 * s.k7);
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h_ = h * fac;
      t_ = (h == span) ? t_limit : t_ + h;
      x_ = s.x1;
      k1_ = s.k7;
      return d;
    }
    h_ = h * std::clamp(0.9 * std::pow(en, -0.2), 0.2, 1.0);
    if (h_ < opt_.min_step * std::max(1.0, std::abs(t_))) {
      throw Error("integrator step size underflow at t=" + std::to_string(t_));
    }
  }
}

std::vector<DenseStep> integrate_dense(const OdeRhs& f, double t0, const Vec& x0, double t1,
                                       const IntegratorOptions& options) {
  std::vector<DenseStep> out;
  if (t1 <= t0) return out;
  Dopri5Stepper stepper(f, t0, x0, options);
  while (stepper.t() < t1) out.push_back(stepper.step(t1));
  return out;
}

DenseStep rk4_dense_step(const OdeRhs& f, double t, const Vec& x, const Vec& k1, double h) {
  const Vec k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const Vec k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const Vec k4 = f(t + h, x + h * k3);
  DenseStep d;
  d.t0 = t;
  d.h = h;
  d.x0 = x;
  d.k1 = k1;
  d.x1 = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  const Vec f1 = f(t + h, d.x1);
  d.r2 = d.x1 - x;
  d.r3 = h * k1 - d.r2;
  d.r4 = d.r2 - h * f1 - d.r3;
  d.r5 = Vec::Zero(x.size());
  return d;
}

Vec rk4_integrate(const OdeRhs& f, double t0, const Vec& x0, double t1, int steps) {
  Vec x = x0;
  if (steps <= 0 || t1 == t0) return x;
  const double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = f(t + h, x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace hycon
