#include "dbi/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "dbi/errors.hpp"

namespace dbi {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("config: unknown key '" + path + item.key() + "'");
    }
  }
}

const json& require_key(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("config: missing required key '" + path + key + "'");
  }
  return *it;
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("config: '" + where + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) {
    throw ConfigError("config: '" + where + "' must be an integer");
  }
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError("config: '" + where + "' must be an integer");
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    throw ConfigError("config: '" + where + "' must be >= 0");
  }
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError("config: '" + where + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_double_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("config: '" + where + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(as_double(x, where));
  return out;
}

OutcomeSpec parse_outcomes(const json& j) {
  if (!j.is_object()) throw ConfigError("config: 'outcomes' must be an object");
  reject_unknown_keys(j, "outcomes.", {"family", "means", "sds"});
  OutcomeSpec spec;
  const std::string family = as_string(require_key(j, "outcomes.", "family"), "outcomes.family");
  if (family == "normal") {
    spec.family = OutcomeFamily::kNormal;
  } else if (family == "bernoulli") {
    spec.family = OutcomeFamily::kBernoulli;
  } else {
    throw ConfigError("config: 'outcomes.family' must be 'normal' or 'bernoulli'");
  }
  spec.means = as_double_array(require_key(j, "outcomes.", "means"), "outcomes.means");
  if (j.contains("sds")) spec.sds = as_double_array(j["sds"], "outcomes.sds");
  spec.validate();
  return spec;
}

ArmDelaySpec parse_arm_delay(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
  ArmDelaySpec spec;
  const std::string kind = as_string(require_key(j, path + ".", "kind"), path + ".kind");
  if (kind == "zero") {
    reject_unknown_keys(j, path + ".", {"censor_prob", "kind"});
    spec.kind = FiniteDelayKind::kZero;
  } else if (kind == "negative_binomial") {
    reject_unknown_keys(j, path + ".", {"censor_prob", "kind", "r", "p"});
    spec.kind = FiniteDelayKind::kNegativeBinomial;
    spec.nb_r = as_double(require_key(j, path + ".", "r"), path + ".r");
    spec.nb_p = as_double(require_key(j, path + ".", "p"), path + ".p");
  } else if (kind == "rounded_pareto") {
    reject_unknown_keys(j, path + ".", {"censor_prob", "kind", "shape", "scale"});
    spec.kind = FiniteDelayKind::kRoundedPareto;
    spec.pareto_shape = as_double(require_key(j, path + ".", "shape"), path + ".shape");
    spec.pareto_scale = as_double(require_key(j, path + ".", "scale"), path + ".scale");
  } else {
    throw ConfigError("config: '" + path +
                      ".kind' must be one of zero, negative_binomial, rounded_pareto");
  }
  if (j.contains("censor_prob")) {
    spec.censor_prob = as_double(j["censor_prob"], path + ".censor_prob");
  }
  spec.validate();
  return spec;
}

PolicyConfig parse_policy(const json& j) {
  if (!j.is_object()) throw ConfigError("config: 'policy' must be an object");
  reject_unknown_keys(j, "policy.", {"kind", "alpha", "clip_c", "ucb_c", "beta_priors"});
  PolicyConfig policy;
  if (j.contains("kind")) {
    const std::string kind = as_string(j["kind"], "policy.kind");
    if (kind == "egreedy") {
      policy.kind = PolicyKind::kEpsilonGreedy;
    } else if (kind == "thompson_clipped") {
      policy.kind = PolicyKind::kThompsonClipped;
    } else if (kind == "ucb_clipped") {
      policy.kind = PolicyKind::kUcbClipped;
    } else {
      throw ConfigError(
          "config: 'policy.kind' must be one of egreedy, thompson_clipped, ucb_clipped");
    }
  }
  if (j.contains("alpha")) {
    policy.decay_alpha = as_double(j["alpha"], "policy.alpha");
    if (!(policy.decay_alpha >= 0.0 && policy.decay_alpha < 1.0)) {
      throw ConfigError("config: policy.alpha out of range [0,1)");
    }
  }
  if (j.contains("clip_c")) policy.clip_c = as_double(j["clip_c"], "policy.clip_c");
  if (j.contains("ucb_c")) policy.ucb_c = as_double(j["ucb_c"], "policy.ucb_c");
  if (j.contains("beta_priors")) {
    const json& priors = j["beta_priors"];
    if (!priors.is_array()) {
      throw ConfigError("config: 'policy.beta_priors' must be an array of [alpha, beta]");
    }
    for (const auto& p : priors) {
      if (!p.is_array() || p.size() != 2) {
        throw ConfigError("config: 'policy.beta_priors' entries must be [alpha, beta]");
      }
      policy.beta_priors.push_back(
          BetaParams{as_double(p[0], "policy.beta_priors"), as_double(p[1], "policy.beta_priors")});
    }
  }
  return policy;
}

}  // namespace

ExperimentConfig parse_config_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  reject_unknown_keys(j, "",
                      {"schema_version", "arms", "outcomes", "delays", "policy", "weights",
                       "horizon", "replications", "seed", "contrasts", "ci_alpha",
                       "nh0_mode", "mu_clip", "estimators", "log_trajectories"});
  if (j.contains("schema_version") && as_int(j["schema_version"], "schema_version") != 1) {
    throw ConfigError("config: unsupported schema_version (expected 1)");
  }

  ExperimentConfig cfg;
  cfg.outcomes = parse_outcomes(require_key(j, "", "outcomes"));

  const json& delays = require_key(j, "", "delays");
  if (!delays.is_array()) throw ConfigError("config: 'delays' must be an array");
  for (std::size_t a = 0; a < delays.size(); ++a) {
    cfg.delays.arms.push_back(
        parse_arm_delay(delays[a], "delays[" + std::to_string(a) + "]"));
  }

  if (j.contains("arms") && as_int(j["arms"], "arms") != cfg.outcomes.arms()) {
    throw ConfigError("config: 'arms' does not match the length of outcomes.means");
  }
  if (j.contains("policy")) cfg.policy = parse_policy(j["policy"]);
  if (j.contains("weights")) {
    const std::string w = as_string(j["weights"], "weights");
    if (w == "sqrt_propensity") {
      cfg.weights = WeightScheme::kSqrtPropensity;
    } else if (w == "constant_one") {
      cfg.weights = WeightScheme::kConstantOne;
    } else {
      throw ConfigError("config: 'weights' must be 'sqrt_propensity' or 'constant_one'");
    }
  }
  if (j.contains("horizon")) cfg.horizon = as_int(j["horizon"], "horizon");
  if (j.contains("replications")) cfg.replications = as_int(j["replications"], "replications");
  if (j.contains("seed")) cfg.seed = as_u64(j["seed"], "seed");
  if (j.contains("contrasts")) {
    const json& contrasts = j["contrasts"];
    if (!contrasts.is_array()) throw ConfigError("config: 'contrasts' must be an array");
    for (std::size_t c = 0; c < contrasts.size(); ++c) {
      cfg.contrasts.push_back(
          as_double_array(contrasts[c], "contrasts[" + std::to_string(c) + "]"));
    }
  }
  if (j.contains("ci_alpha")) {
    cfg.ci_alpha = as_double(j["ci_alpha"], "ci_alpha");
    if (!(cfg.ci_alpha > 0.0 && cfg.ci_alpha < 1.0)) {
      throw ConfigError("config: ci_alpha out of range (0,1)");
    }
  }
  if (j.contains("nh0_mode")) {
    const std::string mode = as_string(j["nh0_mode"], "nh0_mode");
    if (mode == "flat") {
      cfg.nh0_mode = Nh0Mode::kFlat;
    } else if (mode == "adaptive") {
      cfg.nh0_mode = Nh0Mode::kAdaptive;
    } else {
      throw ConfigError("config: 'nh0_mode' must be 'flat' or 'adaptive'");
    }
  }
  if (j.contains("mu_clip")) cfg.mu_clip = as_double(j["mu_clip"], "mu_clip");
  if (j.contains("estimators")) {
    const json& estimators = j["estimators"];
    if (!estimators.is_array()) throw ConfigError("config: 'estimators' must be an array");
    cfg.estimators.clear();
    for (const auto& e : estimators) {
      const std::string name = as_string(e, "estimators");
      const auto family = estimator_from_name(name);
      if (!family) {
        throw ConfigError("config: estimators: unknown estimator name '" + name + "'");
      }
      cfg.estimators.push_back(*family);
    }
  }
  if (j.contains("log_trajectories")) {
    cfg.log_trajectories = as_int(j["log_trajectories"], "log_trajectories");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON in '" + path + "': " + e.what());
  }
  return parse_config_json(j);
}

const char* weight_scheme_name(WeightScheme scheme) {
  return scheme == WeightScheme::kSqrtPropensity ? "sqrt_propensity" : "constant_one";
}

const char* policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kEpsilonGreedy: return "egreedy";
    case PolicyKind::kThompsonClipped: return "thompson_clipped";
    case PolicyKind::kUcbClipped: return "ucb_clipped";
  }
  return "unknown";
}

const char* nh0_mode_name(Nh0Mode mode) {
  return mode == Nh0Mode::kFlat ? "flat" : "adaptive";
}

const char* outcome_family_name(OutcomeFamily family) {
  return family == OutcomeFamily::kNormal ? "normal" : "bernoulli";
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["arms"] = cfg.arms();
  json outcomes;
  outcomes["family"] = outcome_family_name(cfg.outcomes.family);
  outcomes["means"] = cfg.outcomes.means;
  if (cfg.outcomes.family == OutcomeFamily::kNormal) outcomes["sds"] = cfg.outcomes.sds;
  j["outcomes"] = outcomes;

  json delays = json::array();
  for (const auto& arm : cfg.delays.arms) {
    json d;
    d["censor_prob"] = arm.censor_prob;
    switch (arm.kind) {
      case FiniteDelayKind::kZero:
        d["kind"] = "zero";
        break;
      case FiniteDelayKind::kNegativeBinomial:
        d["kind"] = "negative_binomial";
        d["r"] = arm.nb_r;
        d["p"] = arm.nb_p;
        break;
      case FiniteDelayKind::kRoundedPareto:
        d["kind"] = "rounded_pareto";
        d["shape"] = arm.pareto_shape;
        d["scale"] = arm.pareto_scale;
        break;
    }
    delays.push_back(d);
  }
  j["delays"] = delays;

  json policy;
  policy["kind"] = policy_kind_name(cfg.policy.kind);
  policy["alpha"] = cfg.policy.decay_alpha;
  policy["clip_c"] = cfg.policy.clip_c;
  if (cfg.policy.kind == PolicyKind::kUcbClipped) policy["ucb_c"] = cfg.policy.ucb_c;
  if (cfg.policy.kind == PolicyKind::kThompsonClipped) {
    json priors = json::array();
    for (const auto& p : cfg.policy.beta_priors) {
      priors.push_back(json::array({p.alpha, p.beta}));
    }
    policy["beta_priors"] = priors;
  }
  j["policy"] = policy;

  j["weights"] = weight_scheme_name(cfg.weights);
  j["horizon"] = cfg.horizon;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["contrasts"] = cfg.contrasts;
  j["ci_alpha"] = cfg.ci_alpha;
  j["nh0_mode"] = nh0_mode_name(cfg.nh0_mode);
  j["mu_clip"] = cfg.mu_clip;
  json estimators = json::array();
  for (EstimatorFamily f : cfg.estimators) estimators.push_back(estimator_name(f));
  j["estimators"] = estimators;
  j["log_trajectories"] = cfg.log_trajectories;
  return j;
}

}  // namespace dbi
