#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dbi/rng.hpp"

namespace dbi {

using Arm = int;

// Delay in whole time steps. kDelayNever marks an outcome that never
// arrives (censoring).
using DelayValue = std::uint64_t;
inline constexpr DelayValue kDelayNever = std::numeric_limits<std::uint64_t>::max();

inline bool delay_is_censored(DelayValue d) noexcept { return d == kDelayNever; }

enum class OutcomeFamily { kNormal, kBernoulli };

// Per-arm outcome law: i.i.d. across time, independent of actions and delays.
struct OutcomeSpec {
  OutcomeFamily family = OutcomeFamily::kNormal;
  std::vector<double> means;  // mu(a)
  std::vector<double> sds;    // sigma_a; derived for bernoulli

  int arms() const { return static_cast<int>(means.size()); }
  void validate() const;  // throws ConfigError
  double true_mean(Arm a) const { return means[static_cast<std::size_t>(a)]; }
  double true_sd(Arm a) const;

  // Draws the full potential-outcome vector; exactly `arms()` words of the
  // stream are consumed, so the stream position depends only on t.
  std::vector<double> sample_all(SplitRng& rng) const;
};

enum class FiniteDelayKind { kZero, kNegativeBinomial, kRoundedPareto };

// Arm-wise delay law: a censoring atom at infinity plus a finite component.
// Every finite component places positive mass at 0.
struct ArmDelaySpec {
  double censor_prob = 0.0;
  FiniteDelayKind kind = FiniteDelayKind::kZero;
  double nb_r = 2.0;          // negative binomial: number of successes r > 0
  double nb_p = 0.5;          // negative binomial: success probability in (0,1)
  double pareto_shape = 0.7;  // rounded Pareto: tail index beta > 0
  double pareto_scale = 1.0;  // rounded Pareto: scale x_m > 0

  void validate() const;  // throws ConfigError

  // P{D < infinity} = 1 - censor_prob.
  double prob_finite() const { return 1.0 - censor_prob; }

  // P{D <= d} for integer d >= 0 (includes the censoring deficit).
  double prob_delay_le(std::int64_t d) const;

  // Prefix table F[d] = P{D <= d} for d = 0..max_d; O(max_d) total.
  std::vector<double> prob_delay_le_table(int max_d) const;

  // P{D = 0} of the finite component alone (always positive for valid specs).
  double finite_mass_at_zero() const;
};

struct DelaySpec {
  std::vector<ArmDelaySpec> arms;

  int arm_count() const { return static_cast<int>(arms.size()); }
  void validate() const;
};

// One delay draw for the given arm: kDelayNever with probability
// censor_prob, otherwise a draw from the finite component.
DelayValue sample_delay(SplitRng& rng, const DelaySpec& spec, Arm arm);
DelayValue sample_delay(SplitRng& rng, const ArmDelaySpec& spec);

// One time step of the experiment log.
struct TrajectoryRecord {
  int t = 0;  // 1-based time index
  Arm action = 0;
  DelayValue delay = 0;
  double outcome = 0.0;               // realized Y_t = Y_t(action)
  std::vector<double> propensities;   // pi_t(.), on the simplex
  std::vector<double> weights;        // h_t(.), non-negative
  std::vector<double> potential_outcomes;  // full vector; kept by the
                                           // simulator, absent in loaded logs
};

struct Trajectory {
  int horizon = 0;
  std::vector<TrajectoryRecord> records;  // t = 1..horizon, in order

  int arms() const {
    return records.empty() ? 0 : static_cast<int>(records.front().propensities.size());
  }
  // Structural checks for loaded data (contiguous t, simplex propensities,
  // positive played-arm propensity, non-negative weights). Throws DataError.
  void validate() const;
};

// Categorical draw from a propensity vector.
Arm sample_action(SplitRng& rng, const std::vector<double>& propensities);

// Record indices (0-based) whose outcome has arrived by t_cut, i.e.
// t + D <= t_cut. Censored records never appear. 0 <= t_cut <= horizon.
std::vector<int> arrivals_up_to(const Trajectory& traj, int t_cut);

// Per-replication stream bundle; actions, delays and outcomes are sampled
// from independent sub-streams.
struct EnvStreams {
  SplitRng action;
  SplitRng delay;
  SplitRng outcome;

  static EnvStreams derive(std::uint64_t base_seed, std::uint64_t replication) {
    return EnvStreams{SplitRng::derive(base_seed, replication, StreamTag::kAction),
                      SplitRng::derive(base_seed, replication, StreamTag::kDelay),
                      SplitRng::derive(base_seed, replication, StreamTag::kOutcome)};
  }
};

struct PolicyConfig;
class PolicyState;
enum class WeightScheme : int;

// Generates the record at time t. The policy state must reflect exactly the
// outcomes that have arrived by t-1; this function does not mutate it.
TrajectoryRecord step(EnvStreams& streams, int t, const PolicyState& state,
                      const OutcomeSpec& outcomes, const DelaySpec& delays,
                      const PolicyConfig& policy, WeightScheme scheme);

// Full arrival-driven simulation of one trajectory. Deterministic given
// (base_seed, replication) and the configuration.
Trajectory simulate_trajectory(const OutcomeSpec& outcomes, const DelaySpec& delays,
                               const PolicyConfig& policy, WeightScheme scheme,
                               int horizon, std::uint64_t base_seed,
                               std::uint64_t replication);

}  // namespace dbi
