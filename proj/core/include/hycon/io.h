#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hycon/contraction.h"
#include "hycon/intrinsic_distance.h"
#include "hycon/simulator.h"
#include "hycon/variational.h"

namespace hycon {

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const Mat& m);
Vec vec_from_json(const nlohmann::json& j);
Mat mat_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HybridState& s);
nlohmann::json to_json(const ResetEvent& e);
nlohmann::json to_json(const SaltationRecord& r);
nlohmann::json to_json(const Witness& w);
nlohmann::json to_json(const ContractionCertificate& c);
nlohmann::json to_json(const PathCandidate& p);
nlohmann::json to_json(const DistanceEstimate& d);
nlohmann::json to_json(const TranslationResetReport& r);
nlohmann::json to_json(const SwitchingSurfaceReport& r);

// First line of every CSV: "# key=value ..." with the seed and system.
std::string csv_header_line(const std::string& system, unsigned seed);

// Columns t, mode, x1..xN (N = max dimension, short states padded empty),
// event (1 on the post-reset row of an event).  With sample_dt > 0 the
// arcs are sampled on a uniform grid, otherwise at integrator steps.
std::string trajectory_csv(const HybridSystemSpec& sys, const HybridTrajectory& traj,
                           const std::string& header_line, double sample_dt = 0.0);

nlohmann::json events_json(const HybridTrajectory& traj);

// One row per mode and transition: location, kind, value, t, x.
std::string certificate_csv(const ContractionCertificate& c, const std::string& header_line);

// Columns pair, t, distance, bound, ratio.
std::string experiment_csv(const ExperimentReport& r, const std::string& header_line);

// Writes text, creating parent directories.  Throws Error on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hycon
