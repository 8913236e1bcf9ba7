#pragma once

#include <string>

#include <json.hpp>

#include "dbi/montecarlo.hpp"

namespace dbi {

// Strict, versioned JSON schema for experiment configs. Unknown keys are
// rejected with their path; missing optional fields take documented
// defaults. Throws ConfigError on any violation.
ExperimentConfig parse_config_json(const nlohmann::json& j);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialization of a resolved config (all defaults filled, keys
// sorted); the basis of the manifest's config hash.
nlohmann::json config_to_json(const ExperimentConfig& config);

const char* weight_scheme_name(WeightScheme scheme);
const char* policy_kind_name(PolicyKind kind);
const char* nh0_mode_name(Nh0Mode mode);
const char* outcome_family_name(OutcomeFamily family);

}  // namespace dbi
