#include "dbi/policies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dbi/errors.hpp"
#include "dbi/special.hpp"

namespace dbi {

void PolicyConfig::validate(int arms, OutcomeFamily family) const {
  if (arms < 2) throw ConfigError("policy: at least two arms required");
  if (!(decay_alpha >= 0.0 && decay_alpha < 1.0)) {
    throw ConfigError("policy.alpha out of range [0,1)");
  }
  if (!(clip_c > 0.0) || !std::isfinite(clip_c)) {
    throw ConfigError("policy.clip_c must be > 0");
  }
  if (kind == PolicyKind::kUcbClipped && (!(ucb_c > 0.0) || !std::isfinite(ucb_c))) {
    throw ConfigError("policy.ucb_c must be > 0");
  }
  if (kind == PolicyKind::kThompsonClipped) {
    if (arms != 2) {
      throw ConfigError("policy: thompson_clipped supports exactly two arms");
    }
    if (family != OutcomeFamily::kBernoulli) {
      throw ConfigError("policy: thompson_clipped requires bernoulli outcomes");
    }
    if (!beta_priors.empty() && static_cast<int>(beta_priors.size()) != arms) {
      throw ConfigError("policy.beta_priors must list one prior per arm");
    }
    for (const auto& prior : beta_priors) {
      if (!(prior.alpha > 0.0) || !(prior.beta > 0.0)) {
        throw ConfigError("policy.beta_priors entries must be > 0");
      }
    }
  }
}

double PolicyConfig::epsilon_at(int t, int arms) const {
  const double cap = 1.0 - 1.0 / static_cast<double>(arms);
  return std::min(clip_c * std::pow(static_cast<double>(t), -decay_alpha), cap);
}

PolicyState::PolicyState(const PolicyConfig& config, int arms)
    : track_posterior_(config.kind == PolicyKind::kThompsonClipped),
      counts_(static_cast<std::size_t>(arms), 0),
      sums_(static_cast<std::size_t>(arms), 0.0),
      posteriors_(static_cast<std::size_t>(arms)) {
  if (track_posterior_ && !config.beta_priors.empty()) {
    posteriors_ = config.beta_priors;
  }
}

double PolicyState::arrived_mean(Arm a) const {
  const auto i = static_cast<std::size_t>(a);
  if (counts_[i] <= 0) {
    throw std::logic_error("PolicyState::arrived_mean: arm has no arrivals");
  }
  return sums_[i] / static_cast<double>(counts_[i]);
}

void PolicyState::update_on_arrivals(const Trajectory& traj,
                                     std::span<const int> newly_arrived) {
  for (int idx : newly_arrived) {
    if (!delivered_.insert(idx).second) {
      throw std::logic_error("PolicyState::update_on_arrivals: record delivered twice");
    }
    const auto& rec = traj.records.at(static_cast<std::size_t>(idx));
    const auto a = static_cast<std::size_t>(rec.action);
    counts_[a] += 1;
    sums_[a] += rec.outcome;
    if (track_posterior_) {
      if (rec.outcome != 0.0 && rec.outcome != 1.0) {
        throw DataError("thompson policy update requires 0/1 outcomes");
      }
      posteriors_[a].alpha += rec.outcome;
      posteriors_[a].beta += 1.0 - rec.outcome;
    }
  }
}

namespace {

// Unobserved arms rank above all observed arms; ties go to the smallest id.
Arm greedy_arm(const PolicyState& state) {
  const int K = state.arms();
  for (Arm a = 0; a < K; ++a) {
    if (state.arrived_count(a) == 0) return a;
  }
  Arm best = 0;
  double best_mean = state.arrived_mean(0);
  for (Arm a = 1; a < K; ++a) {
    const double m = state.arrived_mean(a);
    if (m > best_mean) {
      best = a;
      best_mean = m;
    }
  }
  return best;
}

std::vector<double> one_hot_with_floor(int arms, Arm favored, double epsilon) {
  const double floor = epsilon / static_cast<double>(arms - 1);
  std::vector<double> pi(static_cast<std::size_t>(arms), floor);
  // When epsilon sits at its 1 - 1/K cap, 1 - epsilon equals the floor up to
  // rounding; taking the max keeps pi(a) >= eps_t/(K-1) exact for every arm.
  pi[static_cast<std::size_t>(favored)] = std::max(1.0 - epsilon, floor);
  return pi;
}

}  // namespace

std::vector<double> egreedy_propensities(const PolicyState& state, int t,
                                         const PolicyConfig& config) {
  const int K = state.arms();
  if (K < 2) throw ConfigError("egreedy_propensities: at least two arms required");
  if (t < 1) throw std::invalid_argument("egreedy_propensities: t must be >= 1");
  return one_hot_with_floor(K, greedy_arm(state), config.epsilon_at(t, K));
}

std::vector<double> thompson_clipped_propensities(const PolicyState& state, int t,
                                                  const PolicyConfig& config) {
  if (state.arms() != 2) {
    throw ConfigError("thompson_clipped_propensities: exactly two arms required");
  }
  if (t < 1) throw std::invalid_argument("thompson_clipped_propensities: t must be >= 1");
  const BetaParams& p1 = state.posterior(1);
  const BetaParams& p0 = state.posterior(0);
  const double q = beta_prob_ge(p1.alpha, p1.beta, p0.alpha, p0.beta);
  const double eps = config.epsilon_at(t, 2);
  // Assign the floor exactly at the clip boundaries so both arms satisfy
  // pi >= eps without rounding slack.
  if (q <= eps) return {1.0 - eps, eps};
  if (q >= 1.0 - eps) return {eps, 1.0 - eps};
  return {1.0 - q, q};
}

std::vector<double> ucb_clipped_propensities(const PolicyState& state, int t,
                                             const PolicyConfig& config) {
  const int K = state.arms();
  if (K < 2) throw ConfigError("ucb_clipped_propensities: at least two arms required");
  if (t < 1) throw std::invalid_argument("ucb_clipped_propensities: t must be >= 1");
  Arm best = 0;
  double best_index = -std::numeric_limits<double>::infinity();
  for (Arm a = 0; a < K; ++a) {
    const int n = state.arrived_count(a);
    const double index =
        n > 0 ? state.arrived_mean(a) +
                    config.ucb_c * std::sqrt(std::log(static_cast<double>(t)) / n)
              : std::numeric_limits<double>::infinity();
    if (index > best_index) {
      best = a;
      best_index = index;
    }
  }
  return one_hot_with_floor(K, best, config.epsilon_at(t, K));
}

std::vector<double> policy_propensities(const PolicyState& state, int t,
                                        const PolicyConfig& config) {
  switch (config.kind) {
    case PolicyKind::kEpsilonGreedy:
      return egreedy_propensities(state, t, config);
    case PolicyKind::kThompsonClipped:
      return thompson_clipped_propensities(state, t, config);
    case PolicyKind::kUcbClipped:
      return ucb_clipped_propensities(state, t, config);
  }
  throw ConfigError("policy: unknown kind");
}

std::vector<std::vector<double>> replay_propensities(const Trajectory& traj,
                                                     const PolicyConfig& config) {
  const int T = traj.horizon;
  const int K = traj.arms();
  PolicyState state(config, K);
  std::vector<std::vector<int>> due(static_cast<std::size_t>(std::max(T, 1)));
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    if (delay_is_censored(rec.delay)) continue;
    const std::uint64_t arrive = static_cast<std::uint64_t>(rec.t) + rec.delay;
    if (arrive < static_cast<std::uint64_t>(T)) {
      due[static_cast<std::size_t>(arrive)].push_back(static_cast<int>(i));
    }
  }
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    if (t >= 2) state.update_on_arrivals(traj, due[static_cast<std::size_t>(t - 1)]);
    out.push_back(policy_propensities(state, t, config));
  }
  return out;
}

}  // namespace dbi
