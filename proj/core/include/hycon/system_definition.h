#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hycon/hybrid_model.h"

namespace hycon {

// Declarative, serializable description of a hybrid system whose fields,
// guards and resets are expressions (see expression.h).  Compiling it gives
// a HybridSystemSpec with analytic Jacobians obtained by symbolic
// differentiation.
//
// JSON layout:
//   {
//     "name": "...",
//     "parameters": {"a": 1.0, ...},
//     "max_events_per_unit_time": 1000,
//     "modes": [{"id": "L", "dim": 2, "state": ["x1", "x2"],
//                "norm": {"kind": "WeightedL2", "weight": [[...], ...]},
//                "field": ["-a*x1", "-b*x2"],
//                "domain": ["1 - x1"],          // all >= 0; optional
//                "region": {"lo": [...], "hi": [...]}}],   // optional
//     "transitions": [{"from": "R", "to": "L", "guard": "x1 - 1",
//                      "reset": ["x1", "x2"],
//                      "enabled": "-x2"}]       // enabled when > 0; optional
//   }
// Weight entries may be numbers or constant expressions of the parameters.
struct ModeDefinition {
  std::string id;
  int dim{0};
  std::vector<std::string> state;
  std::string norm_kind{"L2"};
  std::vector<std::vector<std::string>> weight;
  std::vector<std::string> field;
  std::vector<std::string> domain;
  std::optional<Box> region;
};

struct TransitionDefinition {
  std::string from;
  std::string to;
  std::string guard;
  std::vector<std::string> reset;
  std::string enabled;
};

struct SystemDefinition {
  std::string name;
  std::map<std::string, double> parameters;
  int max_events_per_unit_time{1000};
  std::vector<ModeDefinition> modes;
  std::vector<TransitionDefinition> transitions;
};

SystemDefinition definition_from_json(const nlohmann::json& j);
nlohmann::json definition_to_json(const SystemDefinition& def);
SystemDefinition load_definition(const std::string& path);

// Throws ConfigError on malformed expressions or unknown identifiers.
HybridSystemSpec compile(const SystemDefinition& def);

}  // namespace hycon
