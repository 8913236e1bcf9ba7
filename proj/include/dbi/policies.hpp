#pragma once

#include <span>
#include <unordered_set>
#include <vector>

#include "dbi/env.hpp"

namespace dbi {

enum class PolicyKind { kEpsilonGreedy, kThompsonClipped, kUcbClipped };

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// Arrival-aware learning policies with exact propensities. All of them keep
// the exploration floor eps_t = min(clip_c * t^-decay_alpha, 1 - 1/K), so
// every arm retains propensity at least eps_t / (K - 1) at every step.
struct PolicyConfig {
  PolicyKind kind = PolicyKind::kEpsilonGreedy;
  double decay_alpha = 0.3;  // in [0, 1)
  double clip_c = 1.0;       // > 0
  double ucb_c = 1.0;        // > 0, UCB exploration constant
  std::vector<BetaParams> beta_priors;  // Thompson only; defaults to Beta(1,1)

  void validate(int arms, OutcomeFamily family) const;  // throws ConfigError

  // eps_t clamped so the greedy arm is never less likely than uniform.
  double epsilon_at(int t, int arms) const;
};

// Running statistics over outcomes that have *arrived*; the simulation loop
// feeds it exactly the records with t' + D' <= t - 1 before step t.
class PolicyState {
 public:
  PolicyState(const PolicyConfig& config, int arms);

  int arms() const { return static_cast<int>(counts_.size()); }
  int arrived_count(Arm a) const { return counts_[static_cast<std::size_t>(a)]; }
  double arrived_sum(Arm a) const { return sums_[static_cast<std::size_t>(a)]; }
  double arrived_mean(Arm a) const;  // requires arrived_count(a) > 0
  const BetaParams& posterior(Arm a) const { return posteriors_[static_cast<std::size_t>(a)]; }

  // Applies newly arrived records, in calendar order of arrival. Each record
  // index may be delivered exactly once; double delivery is an internal
  // error (std::logic_error).
  void update_on_arrivals(const Trajectory& traj, std::span<const int> newly_arrived);

 private:
  bool track_posterior_ = false;
  std::vector<int> counts_;
  std::vector<double> sums_;
  std::vector<BetaParams> posteriors_;
  std::unordered_set<int> delivered_;
};

// Power-decaying epsilon-greedy: the arm with the highest arrived sample
// mean gets 1 - eps_t, every other arm eps_t / (K - 1). Unobserved arms rank
// above all observed arms; ties break to the smallest arm id.
std::vector<double> egreedy_propensities(const PolicyState& state, int t,
                                         const PolicyConfig& config);

// Two-arm Beta-Bernoulli Thompson sampling with clipped assignment
// probability: pi_t(1) = max(eps_t, min(1 - eps_t, P(theta_1 >= theta_0))).
// The posterior probability is computed by deterministic quadrature.
std::vector<double> thompson_clipped_propensities(const PolicyState& state, int t,
                                                  const PolicyConfig& config);

// Randomized UCB: the arm maximizing mean + ucb_c * sqrt(log t / N(a)) gets
// 1 - eps_t, the rest share eps_t. Unpulled arms have index +infinity.
std::vector<double> ucb_clipped_propensities(const PolicyState& state, int t,
                                             const PolicyConfig& config);

std::vector<double> policy_propensities(const PolicyState& state, int t,
                                        const PolicyConfig& config);

// Recomputes pi_t for every step of a logged trajectory using only outcomes
// that had arrived by t - 1. Reproduces the simulator's propensities
// bit-for-bit; used to verify that policies never peek at undelivered data.
std::vector<std::vector<double>> replay_propensities(const Trajectory& traj,
                                                     const PolicyConfig& config);

}  // namespace dbi
