#pragma once

#include <string>

#include "hycon/types.h"

namespace hycon {

enum class NormKind { kL1, kL2, kLinf, kWeightedL2 };

std::string to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& name);

// A norm on R^dim.  The weighted 2-norm is |x| = sqrt(1/2 x^T E x) for a
// symmetric positive definite E (an energy metric).
//
// For the 2-norm family a square root S with |x| = |S x|_2 is cached:
// S = I for L2 and S = sqrt(E / 2) for WeightedL2.
class NormSpec {
 public:
  NormSpec() = default;

  static NormSpec L1(int dim);
  static NormSpec L2(int dim);
  static NormSpec Linf(int dim);
  // Throws NotSpdError if E is not symmetric (to 1e-12 relative) or has an
  // eigenvalue below 1e-12 * lambda_max.
  static NormSpec Weighted(const Mat& E);

  NormKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_two_norm_family() const {
    return kind_ == NormKind::kL2 || kind_ == NormKind::kWeightedL2;
  }
  // E for WeightedL2, identity otherwise.
  const Mat& weight() const { return weight_; }
  const Mat& sqrt_factor() const { return s_; }
  const Mat& inv_sqrt_factor() const { return s_inv_; }

  bool operator==(const NormSpec& other) const;

 private:
  NormKind kind_{NormKind::kL2};
  int dim_{0};
  Mat weight_;
  Mat s_;
  Mat s_inv_;
};

double vector_norm(const Vec& x, const NormSpec& n);

struct InducedNorm {
  double value{0.0};
  // True when the value is only a lower bound found by ascent.
  bool approximate{false};
};

struct InducedNormOptions {
  int restarts{16};
  int max_iterations{200};
  // Sign-vector enumeration is used up to this dimension.
  int max_enumeration_dim{20};
  unsigned seed{12345};
};

// sup_{x != 0} |M x|_to / |x|_from for M of size to.dim() x from.dim().
InducedNorm induced_norm_ex(const Mat& M, const NormSpec& from,
                            const NormSpec& to,
                            const InducedNormOptions& options = {});
double induced_norm(const Mat& M, const NormSpec& from, const NormSpec& to);

// Logarithmic norm of A w.r.t. n.  Returns -infinity for a 0x0 matrix.
double matrix_measure(const Mat& A, const NormSpec& n);

// 1/2 (A^T E + E A), the matrix displayed for energy metrics.
Mat weighted_symmetric_part(const Mat& A, const Mat& E);

// Symmetric square root by eigendecomposition.  Throws NotSpdError.
Mat symmetric_sqrt(const Mat& E);

double largest_singular_value(const Mat& M);

}  // namespace hycon
