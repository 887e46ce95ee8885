#include "hycon/mechanics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hycon/errors.h"

namespace hycon {

namespace {

bool is_spd(const Mat& A) {
  if (A.rows() != A.cols() || A.rows() == 0) return false;
  if ((A - A.transpose()).norm() > 1e-12 * (1.0 + A.norm())) return false;
  Eigen::LLT<Mat> llt(A);
  return llt.info() == Eigen::Success;
}

Mat gram_inverse(const Mat& M, const Mat& Da_J, Mat* minv_dat) {
  const Mat minv_daT = M.ldlt().solve(Da_J.transpose());
  const Mat gram = Da_J * minv_daT;
  Eigen::FullPivLU<Mat> lu(gram);
  if (lu.rank() < Da_J.rows()) {
    throw RankDeficiencyError("constraint rows are linearly dependent (rank " +
                              std::to_string(lu.rank()) + " of " +
                              std::to_string(Da_J.rows()) + ")");
  }
  if (minv_dat) *minv_dat = minv_daT;
  return lu.inverse();
}

}  // namespace

void check_network(const MechanicalNetworkParams& p) {
  const auto d = p.M.rows();
  if (!is_spd(p.M)) throw ConfigError("mass matrix M must be symmetric positive definite");
  if (!is_spd(p.K) || p.K.rows() != d)
    throw ConfigError("stiffness K must be symmetric positive definite of size " +
                      std::to_string(d));
  if (!is_spd(p.B) || p.B.rows() != d)
    throw ConfigError("damping B must be symmetric positive definite of size " +
                      std::to_string(d));
  if (p.Da.cols() != d)
    throw ConfigError("constraint matrix Da must have " + std::to_string(d) + " columns");
  if (p.Da.rows() > 6) throw ConfigError("at most 6 constraints are supported");
}

Mat active_rows(const Mat& Da, const std::vector<int>& J) {
  Mat out(static_cast<Eigen::Index>(J.size()), Da.cols());
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (J[i] < 0 || J[i] >= Da.rows()) throw DimensionError("constraint index out of range");
    out.row(static_cast<Eigen::Index>(i)) = Da.row(J[i]);
  }
  return out;
}

Mat constraint_impulse_map(const Mat& M, const Mat& Da_J) {
  const auto d = M.rows();
  if (Da_J.rows() == 0) return Mat::Identity(d, d);
  if (Da_J.cols() != d) throw DimensionError("Da_J column count differs from M");
  Mat minv_daT;
  const Mat ginv = gram_inverse(M, Da_J, &minv_daT);
  return Mat::Identity(d, d) - minv_daT * ginv * Da_J;
}

Mat constraint_impulse_map(const MechanicalNetworkParams& p, const std::vector<int>& J) {
  return constraint_impulse_map(p.M, active_rows(p.Da, J));
}

Vec constraint_multipliers(const Mat& M, const Mat& Da_J, const Vec& f) {
  if (Da_J.rows() == 0) return Vec(0);
  Mat minv_daT;
  const Mat ginv = gram_inverse(M, Da_J, &minv_daT);
  // Da_J M^-1 f = (M^-1 Da_J^T)^T f since M is symmetric.
  return -ginv * (minv_daT.transpose() * f);
}

Vec constraint_force(const MechanicalNetworkParams& p, const std::vector<int>& J, double t,
                     const Vec& q, const Vec& dq) {
  const Mat Da_J = active_rows(p.Da, J);
  const Vec f = p.u(t) - p.K * q - p.B * dq;
  if (Da_J.rows() == 0) return Vec::Zero(q.size());
  return Da_J.transpose() * constraint_multipliers(p.M, Da_J, f);
}

std::string active_set_name(const std::vector<int>& J) {
  if (J.empty()) return "free";
  std::string s = "c";
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (i) s += "_";
    s += std::to_string(J[i] + 1);
  }
  return s;
}

HybridSystemSpec make_mech_network(const MechanicalNetworkParams& p) {
  check_network(p);
  if (!p.u) throw ConfigError("input u is not set");
  const auto d = p.M.rows();
  const int n = static_cast<int>(p.Da.rows());
  const int dim = static_cast<int>(2 * d);

  Mat E = Mat::Zero(dim, dim);
  E.topLeftCorner(d, d) = p.K;
  E.bottomRightCorner(d, d) = p.M;
  const NormSpec norm = NormSpec::Weighted(E);

  HybridSystemSpec sys;
  sys.name = "mech-network";

  auto subset = [n](unsigned mask) {
    std::vector<int> J;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) J.push_back(j);
    return J;
  };

  Box region{Vec::Constant(dim, -1.0), Vec::Constant(dim, 1.0)};

  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const std::vector<int> J = subset(mask);
    const Mat Da_J = active_rows(p.Da, J);
    // Skip sets whose constraints cannot be active together.
    if (Da_J.rows() > 0 && Eigen::FullPivLU<Mat>(Da_J).rank() < Da_J.rows()) continue;
    const Mat P = constraint_impulse_map(p.M, Da_J);

    ModeSpec mode;
    mode.id = active_set_name(J);
    mode.dim = dim;
    mode.norm = norm;
    mode.field = [p, J, d](double t, const Vec& x) {
      const Vec q = x.head(d);
      const Vec dq = x.tail(d);
      const Vec f = p.u(t) - p.K * q - p.B * dq;
      Vec out(2 * d);
      out.head(d) = dq;
      out.tail(d) = p.M.ldlt().solve(f + constraint_force(p, J, t, q, dq));
      return out;
    };
    // The constrained acceleration is linear in x with matrix P M^-1 [-K -B].
    const Mat minv = p.M.inverse();
    Mat A = Mat::Zero(dim, dim);
    A.topRightCorner(d, d) = Mat::Identity(d, d);
    A.bottomLeftCorner(d, d) = -P * minv * p.K;
    A.bottomRightCorner(d, d) = -P * minv * p.B;
    mode.jacobian = [A](double, const Vec&) { return A; };
    mode.domain = [p, J, d](double, const Vec& x) {
      const Vec a = p.Da * x.head(d);
      for (Eigen::Index j = 0; j < a.size(); ++j) {
        const bool active = std::find(J.begin(), J.end(), static_cast<int>(j)) != J.end();
        if (active ? std::abs(a(j)) > 1e-9 : a(j) < -1e-9) return false;
      }
      return true;
    };
    mode.region = region;
    for (Eigen::Index i = 0; i < d; ++i) mode.state_names.push_back("q" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < d; ++i) mode.state_names.push_back("dq" + std::to_string(i + 1));
    sys.modes.push_back(std::move(mode));
  }

  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const std::vector<int> J = subset(mask);
    if (!sys.find_mode(active_set_name(J))) continue;
    for (int j = 0; j < n; ++j) {
      std::vector<int> other = subset(mask ^ (1u << j));
      if (!sys.find_mode(active_set_name(other))) continue;
      const Vec row = p.Da.row(j).transpose();
      Transition tr;
      tr.guard.source = active_set_name(J);
      tr.guard.target = active_set_name(other);
      tr.reset.source = tr.guard.source;
      tr.reset.target = tr.guard.target;
      if (!(mask & (1u << j))) {
        // Touchdown.
        Vec grad = Vec::Zero(dim);
        grad.head(d) = row;
        tr.guard.g = [row, d](double, const Vec& x) { return row.dot(x.head(d)); };
        tr.guard.grad_x = [grad](double, const Vec&) { return grad; };
        tr.guard.enabled = [row, d](double, const Vec& x) {
          return row.dot(x.tail(d)) < -1e-12;
        };
        const Mat P = constraint_impulse_map(p, other);
        Mat R = Mat::Identity(dim, dim);
        R.bottomRightCorner(d, d) = P;
        tr.reset.map = [R](double, const Vec& x) { return Vec(R * x); };
        tr.reset.jac_x = [R](double, const Vec&) { return R; };
      } else {
        // Liftoff: the multiplier of constraint j reaches zero.
        const auto pos = std::find(J.begin(), J.end(), j) - J.begin();
        tr.guard.g = [p, J, pos, d](double t, const Vec& x) {
          const Mat Da_J = active_rows(p.Da, J);
          const Vec f = p.u(t) - p.K * x.head(d) - p.B * x.tail(d);
          return constraint_multipliers(p.M, Da_J, f)(pos);
        };
        tr.reset = ResetSpec::Identity(tr.guard.source, tr.guard.target, dim);
      }
      sys.transitions.push_back(std::move(tr));
    }
  }
  return sys;
}

}  // namespace hycon
