#include "hycon/norms.h"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>
#include <random>

#include "hycon/errors.h"

namespace hycon {
namespace {

constexpr double kSpdRelTol = 1e-12;

void check_dim(int dim) {
  if (dim < 0) throw DimensionError("norm dimension must be nonnegative");
}

// Extreme point of the unit ball of n maximizing <g, y>.
Vec ball_maximizer(const Vec& g, const NormSpec& n) {
  Vec y = Vec::Zero(g.size());
  if (g.size() == 0) return y;
  switch (n.kind()) {
    case NormKind::kL1: {
      Eigen::Index i = 0;
      g.cwiseAbs().maxCoeff(&i);
      y(i) = g(i) >= 0 ? 1.0 : -1.0;
      return y;
    }
    case NormKind::kLinf:
      for (Eigen::Index i = 0; i < g.size(); ++i) y(i) = g(i) >= 0 ? 1.0 : -1.0;
      return y;
    default: {
      // max <g, y> s.t. |S y|_2 <= 1  ->  y = S^-1 S^-T g / |S^-T g|.
      const Vec h = n.inv_sqrt_factor().transpose() * g;
      const double nh = h.norm();
      if (nh == 0.0) return y;
      return n.inv_sqrt_factor() * (h / nh);
    }
  }
}

// An element of the subdifferential of |.|_n at y.
Vec norm_subgradient(const Vec& y, const NormSpec& n) {
  Vec s = Vec::Zero(y.size());
  if (y.size() == 0) return s;
  switch (n.kind()) {
    case NormKind::kL1:
      for (Eigen::Index i = 0; i < y.size(); ++i) s(i) = y(i) >= 0 ? 1.0 : -1.0;
      return s;
    case NormKind::kLinf: {
      Eigen::Index i = 0;
      y.cwiseAbs().maxCoeff(&i);
      s(i) = y(i) >= 0 ? 1.0 : -1.0;
      return s;
    }
    default: {
      const Vec sy = n.sqrt_factor() * y;
      const double ny = sy.norm();
      if (ny == 0.0) return s;
      return n.sqrt_factor().transpose() * (sy / ny);
    }
  }
}

// Maximum of |M x|_to over sign vectors x in {-1,1}^n (the vertices of the
// l-infinity ball).  x and -x give the same value, so the last sign is fixed.
double max_over_sign_vectors(const Mat& M, const NormSpec& to) {
  const int n = static_cast<int>(M.cols());
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  double best = 0.0;
  Vec x(n);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int i = 0; i < n; ++i) {
      x(i) = (i == n - 1 || ((mask >> i) & 1U) == 0) ? 1.0 : -1.0;
    }
    best = std::max(best, vector_norm(M * x, to));
  }
  return best;
}

// Generalized power method: monotone ascent of the convex function
// |M x|_to over the unit ball of `from`.
double ascent_lower_bound(const Mat& M, const NormSpec& from,
                          const NormSpec& to,
                          const InducedNormOptions& options) {
  const int n = static_cast<int>(M.cols());
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = 0.0;
  const int starts = std::max(options.restarts, n);
  for (int r = 0; r < starts; ++r) {
    Vec x(n);
    if (r < n) {
      x = Vec::Unit(n, r);
    } else {
      for (int i = 0; i < n; ++i) x(i) = normal(rng);
    }
    const double nx = vector_norm(x, from);
    if (nx == 0.0) continue;
    x /= nx;
    double value = vector_norm(M * x, to);
    for (int it = 0; it < options.max_iterations; ++it) {
      const Vec g = M.transpose() * norm_subgradient(M * x, to);
      Vec next = ball_maximizer(g, from);
      const double nn = vector_norm(next, from);
      if (nn == 0.0) break;
      next /= nn;
      const double next_value = vector_norm(M * next, to);
      if (next_value <= value * (1.0 + 1e-15)) break;
      x = next;
      value = next_value;
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::kL1:
      return "L1";
    case NormKind::kL2:
      return "L2";
    case NormKind::kLinf:
      return "Linf";
    case NormKind::kWeightedL2:
      return "WeightedL2";
  }
  return "?";
}

NormKind parse_norm_kind(const std::string& name) {
  if (name == "L1" || name == "l1") return NormKind::kL1;
  if (name == "L2" || name == "l2") return NormKind::kL2;
  if (name == "Linf" || name == "linf" || name == "LInf") return NormKind::kLinf;
  if (name == "WeightedL2" || name == "weighted_l2" || name == "weighted") {
    return NormKind::kWeightedL2;
  }
  throw ConfigError("unknown norm kind '" + name + "'");
}

Mat symmetric_sqrt(const Mat& E) {
  if (E.rows() != E.cols()) throw DimensionError("weight must be square");
  if (E.rows() == 0) return Mat(0, 0);
  const double scale = std::max(1.0, E.cwiseAbs().maxCoeff());
  if ((E - E.transpose()).cwiseAbs().maxCoeff() > kSpdRelTol * scale) {
    throw NotSpdError("weight matrix is not symmetric");
  }
  const Mat sym = 0.5 * (E + E.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  const Vec& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  if (!(lmax > 0.0) || lambda.minCoeff() <= kSpdRelTol * lmax) {
    throw NotSpdError("weight matrix is not positive definite");
  }
  return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

double largest_singular_value(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

NormSpec NormSpec::L1(int dim) {
  check_dim(dim);
  NormSpec n;
  n.kind_ = NormKind::kL1;
  n.dim_ = dim;
  n.weight_ = Mat::Identity(dim, dim);
  return n;
}

NormSpec NormSpec::L2(int dim) {
  check_dim(dim);
  NormSpec n;
  n.kind_ = NormKind::kL2;
  n.dim_ = dim;
  n.weight_ = Mat::Identity(dim, dim);
  n.s_ = Mat::Identity(dim, dim);
  n.s_inv_ = Mat::Identity(dim, dim);
  return n;
}

NormSpec NormSpec::Linf(int dim) {
  check_dim(dim);
  NormSpec n;
  n.kind_ = NormKind::kLinf;
  n.dim_ = dim;
  n.weight_ = Mat::Identity(dim, dim);
  return n;
}

NormSpec NormSpec::Weighted(const Mat& E) {
  NormSpec n;
  n.kind_ = NormKind::kWeightedL2;
  n.dim_ = static_cast<int>(E.rows());
  n.s_ = symmetric_sqrt(E) / std::sqrt(2.0);
  n.weight_ = 0.5 * (E + E.transpose());
  n.s_inv_ = n.s_.rows() == 0 ? Mat(0, 0) : Mat(n.s_.inverse());
  return n;
}

bool NormSpec::operator==(const NormSpec& other) const {
  if (kind_ != other.kind_ || dim_ != other.dim_) return false;
  if (kind_ != NormKind::kWeightedL2) return true;
  return weight_ == other.weight_;
}

double vector_norm(const Vec& x, const NormSpec& n) {
  if (x.size() != n.dim()) {
    throw DimensionError("vector of size " + std::to_string(x.size()) +
                         " does not match norm dimension " +
                         std::to_string(n.dim()));
  }
  if (x.size() == 0) return 0.0;
  switch (n.kind()) {
    case NormKind::kL1:
      return x.lpNorm<1>();
    case NormKind::kLinf:
      return x.lpNorm<Eigen::Infinity>();
    case NormKind::kL2:
      return x.norm();
    case NormKind::kWeightedL2:
      return (n.sqrt_factor() * x).norm();
  }
  return 0.0;
}

InducedNorm induced_norm_ex(const Mat& M, const NormSpec& from,
                            const NormSpec& to,
                            const InducedNormOptions& options) {
  if (M.rows() != to.dim() || M.cols() != from.dim()) {
    throw DimensionError("matrix of size " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + " does not map R^" +
                         std::to_string(from.dim()) + " to R^" +
                         std::to_string(to.dim()));
  }
  if (M.size() == 0) return {0.0, false};

  // Same-family analytic cases.
  if (from.kind() == NormKind::kL1 && to.kind() == NormKind::kL1) {
    return {M.cwiseAbs().colwise().sum().maxCoeff(), false};
  }
  if (from.kind() == NormKind::kLinf && to.kind() == NormKind::kLinf) {
    return {M.cwiseAbs().rowwise().sum().maxCoeff(), false};
  }
  if (from.is_two_norm_family() && to.is_two_norm_family()) {
    return {largest_singular_value(to.sqrt_factor() * M *
                                   from.inv_sqrt_factor()),
            false};
  }

  // Mixed families.  The unit ball of L1 is the convex hull of +-e_j, so the
  // convex function |M x|_to peaks at a column.
  if (from.kind() == NormKind::kL1) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      best = std::max(best, vector_norm(M.col(j), to));
    }
    return {best, false};
  }
  // sup over an ellipsoid of max_i |m_i x| is max_i |m_i S^-1|_2.
  if (to.kind() == NormKind::kLinf && from.is_two_norm_family()) {
    const Mat P = M * from.inv_sqrt_factor();
    return {P.rowwise().norm().maxCoeff(), false};
  }
  if (from.kind() == NormKind::kLinf &&
      M.cols() <= options.max_enumeration_dim) {
    return {max_over_sign_vectors(M, to), false};
  }
  // |M x|_1 = max_s s^T M x, so sup over an ellipsoid is max_s |S^-T M^T s|.
  if (to.kind() == NormKind::kL1 && from.is_two_norm_family() &&
      M.rows() <= options.max_enumeration_dim) {
    const Mat P = (M * from.inv_sqrt_factor()).transpose();
    return {max_over_sign_vectors(P, NormSpec::L2(static_cast<int>(P.rows()))),
            false};
  }
  return {ascent_lower_bound(M, from, to, options), true};
}

double induced_norm(const Mat& M, const NormSpec& from, const NormSpec& to) {
  return induced_norm_ex(M, from, to).value;
}

Mat weighted_symmetric_part(const Mat& A, const Mat& E) {
  if (A.rows() != A.cols() || E.rows() != A.rows() || E.cols() != A.cols()) {
    throw DimensionError("weighted_symmetric_part: dimension mismatch");
  }
  return 0.5 * (A.transpose() * E + E * A);
}

double matrix_measure(const Mat& A, const NormSpec& n) {
  if (A.rows() != A.cols()) throw DimensionError("measure of non-square matrix");
  if (A.rows() != n.dim()) {
    throw DimensionError("matrix of size " + std::to_string(A.rows()) +
                         " does not match norm dimension " +
                         std::to_string(n.dim()));
  }
  const Eigen::Index d = A.rows();
  if (d == 0) return -std::numeric_limits<double>::infinity();
  switch (n.kind()) {
    case NormKind::kL1: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < d; ++j) {
        double v = A(j, j);
        for (Eigen::Index i = 0; i < d; ++i) {
          if (i != j) v += std::abs(A(i, j));
        }
        best = std::max(best, v);
      }
      return best;
    }
    case NormKind::kLinf: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < d; ++i) {
        double v = A(i, i);
        for (Eigen::Index j = 0; j < d; ++j) {
          if (i != j) v += std::abs(A(i, j));
        }
        best = std::max(best, v);
      }
      return best;
    }
    case NormKind::kL2: {
      const Mat sym = 0.5 * (A + A.transpose());
      return Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
    }
    case NormKind::kWeightedL2: {
      // (A^T E + E A) v = 2 mu E v.
      const Mat& E = n.weight();
      const Mat P = weighted_symmetric_part(A, E);
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(
          0.5 * (P + P.transpose()), E, Eigen::EigenvaluesOnly);
      return ges.eigenvalues().maxCoeff();
    }
  }
  return 0.0;
}

}  // namespace hycon
