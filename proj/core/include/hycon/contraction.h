#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hycon/hybrid_model.h"
#include "hycon/intrinsic_distance.h"
#include "hycon/variational.h"

namespace hycon {

// Points center + L u with |u|_2 <= 1.
struct Ellipsoid {
  Vec center;
  Mat shape;
};

struct ModeRegion {
  std::optional<Box> box;
  std::optional<Ellipsoid> ellipsoid;
};

struct GuardPoint {
  double t{0.0};
  Vec x;
};

struct SamplingPlan {
  // Overrides of ModeSpec::region.
  std::map<ModeId, ModeRegion> regions;
  // Low-discrepancy (Halton) points per mode and time sample.
  int flow_samples{512};
  // Extra tensor grid with this many points per axis (0 disables).
  int grid_per_axis{0};
  // Guard points per transition and time sample, found along rays from
  // the region center.
  int guard_samples{128};
  int ray_scan{64};
  std::vector<double> times{0.0};
  unsigned seed{1};
  // Local ascent from the best sample.
  bool refine{true};
  // Explicit guard points; replace ray sampling for that transition.
  std::map<TransitionKey, std::vector<GuardPoint>> guard_points;
};

struct Witness {
  std::string location;  // mode id or "source->target"
  double t{0.0};
  Vec x;
  double value{0.0};
};

struct FlowCertificate {
  double c_hat{0.0};
  double c_sampled{0.0};
  Witness witness;
  std::vector<Witness> per_mode;
  std::size_t samples{0};
};

struct ResetCertificate {
  double K_hat{0.0};
  double K_sampled{0.0};
  Witness witness;
  std::vector<Witness> per_transition;
  std::size_t samples{0};
  // Guard points dropped because transversality failed there.
  std::size_t transversality_failures{0};
  std::vector<std::string> notes;
  bool approximate{false};
};

// Dwell-time envelope: c bounds the flow measures, K the saltation norms,
// and successive resets are between tau_lower and tau_upper apart.
struct DwellEnvelope {
  double c{0.0};
  double K{1.0};
  double tau_lower{0.0};
  double tau_upper{std::numeric_limits<double>::infinity()};

  // max{K e^{c tau_lower}, K e^{c tau_upper}} < 1.
  bool contractive_flag() const;
};

// max{K^ceil(t / tau_lower), K^floor((t - s) / tau_upper)} e^{c (t - s)} d_s.
// Conventions: x / 0 = inf for x > 0 and 0 for x = 0; K^inf is inf, 1 or 0
// for K > 1, K = 1, K < 1; 0 * inf = 0.
double envelope_bound(const DwellEnvelope& env, double d_s, double s, double t);

enum class Verdict { kContractiveNonexpansiveResets, kEnvelopeOnly, kViolated };
std::string to_string(Verdict v);

struct CertifyOptions {
  double c_target{0.0};
  // Nonexpansion threshold K_hat <= 1 + k_tol, also the slack on c_target.
  double k_tol{1e-9};
  // Dwell bounds enabling the envelope verdict.
  std::optional<double> tau_lower;
  std::optional<double> tau_upper;
  double transversality_tol{1e-10};
};

struct ContractionCertificate {
  FlowCertificate flow;
  ResetCertificate resets;
  Verdict verdict{Verdict::kViolated};
  CertifyOptions options;
  std::optional<DwellEnvelope> envelope;
};

FlowCertificate certify_flow(const HybridSystemSpec& sys, const SamplingPlan& plan);
ResetCertificate certify_resets(const HybridSystemSpec& sys, const SamplingPlan& plan,
                                const CertifyOptions& options = {});
ContractionCertificate certify(const HybridSystemSpec& sys, const SamplingPlan& plan,
                               const CertifyOptions& options = {});

// Sampled guard points of one transition: on the guard, inside the source
// region, in the closure of the source domain and with the guard enabled.
std::vector<GuardPoint> sample_guard(const HybridSystemSpec& sys, const TransitionKey& key,
                                     const SamplingPlan& plan);

// Sampled points of a mode region inside the mode domain.
std::vector<GuardPoint> sample_mode(const HybridSystemSpec& sys, const ModeId& mode,
                                    const SamplingPlan& plan);

struct AlignmentSample {
  double t{0.0};
  Vec x;
  double xi_norm{0.0};
  double alpha{0.0};
  double residual{0.0};
  double alpha_max{0.0};
  bool aligned{false};
  bool admissible{false};
};

struct TranslationResetReport {
  bool applicable{false};
  std::string reason;
  std::size_t samples{0};
  double min_norm{0.0};
  double max_norm{0.0};
  bool lower_bound_holds{true};  // every sampled norm >= 1 - 1e-9
  bool two_norm{false};
  // Two-norm family only: alignment and admissibility at each sample.
  std::vector<AlignmentSample> alignment;
  // Samples where (aligned and admissible) disagrees with |Xi| = 1.
  std::size_t alignment_mismatches{0};
};

// Translation resets (D_x R = I, equal norms): |Xi| >= 1, with equality in
// the 2-norm iff F_j' - F_j = alpha Dg^T, 0 <= alpha <= -2 (D_t g + Dg F_j) / |Dg|^2.
TranslationResetReport check_translation_reset(const HybridSystemSpec& sys,
                                               const TransitionKey& key,
                                               const SamplingPlan& plan);

struct SwitchingSample {
  double t{0.0};
  Vec x;
  double mu_M{0.0};       // mu((F_+ - F_-) Dg)
  double mu_beta_M{0.0};  // mu(M / (D_t g + Dg F_-)), Xi = I + beta M
  double xi_norm{0.0};
};

struct SwitchingSurfaceReport {
  bool applicable{false};
  std::string reason;
  std::vector<SwitchingSample> samples;
  double max_mu_M{0.0};
  double max_mu_beta_M{0.0};
  double max_xi_norm{0.0};
  // |Xi| = 1 requires mu(beta M) <= 0; false if some sample violates it.
  bool consistent{true};
  // Samples where mu(beta M) > 0 and |Xi| > 1 occur together.
  std::size_t expansion_co_occurrences{0};
};

SwitchingSurfaceReport check_switching_surface(const HybridSystemSpec& sys,
                                               const TransitionKey& key,
                                               const SamplingPlan& plan, double tol = 1e-9);

enum class DistanceKind { kIntrinsic, kAmbient };

struct ExperimentOptions {
  int grid{101};
  DistanceKind distance{DistanceKind::kIntrinsic};
  DistanceOptions distance_options{};
  SimulationOptions simulation{};
};

struct PairReport {
  std::vector<double> times;
  std::vector<double> distances;
  std::vector<double> bounds;
  std::vector<double> ratios;
  double max_ratio{0.0};
  // Largest increase of d between consecutive grid times.
  double max_increase{0.0};
  std::string error;
};

struct ExperimentReport {
  std::vector<PairReport> pairs;
  double max_ratio{0.0};
};

// Distance between two states of equal dimension in the norm of a's mode.
double ambient_distance(const HybridSystemSpec& sys, const HybridState& a, const HybridState& b);

ExperimentReport pairwise_contraction_experiment(
    const HybridSystemSpec& sys, const std::vector<std::pair<HybridState, HybridState>>& inits,
    double t_end, const DwellEnvelope& envelope, const ExperimentOptions& options = {});

}  // namespace hycon
