#include "dbi/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dbi/errors.hpp"
#include "dbi/policies.hpp"
#include "dbi/weighting.hpp"

namespace dbi {

namespace {

// Finite delays larger than this are indistinguishable from "not within any
// supported horizon"; keeps the negative-binomial inverse transform bounded
// and the Pareto draw inside the integer range.
constexpr std::int64_t kFiniteDelayCap = 10'000'000;

}  // namespace

void OutcomeSpec::validate() const {
  if (means.empty()) throw ConfigError("outcomes: at least one arm required");
  if (family == OutcomeFamily::kNormal) {
    if (sds.size() != means.size()) {
      throw ConfigError("outcomes: sds must match means in length");
    }
    for (double s : sds) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw ConfigError("outcomes: standard deviations must be finite and >= 0");
      }
    }
    for (double m : means) {
      if (!std::isfinite(m)) throw ConfigError("outcomes: means must be finite");
    }
  } else {
    for (double m : means) {
      if (!(m >= 0.0 && m <= 1.0)) {
        throw ConfigError("outcomes: bernoulli means must lie in [0,1]");
      }
    }
    if (!sds.empty()) {
      throw ConfigError("outcomes: sds are not configurable for bernoulli");
    }
  }
}

double OutcomeSpec::true_sd(Arm a) const {
  const auto i = static_cast<std::size_t>(a);
  if (family == OutcomeFamily::kBernoulli) {
    return std::sqrt(means[i] * (1.0 - means[i]));
  }
  return sds[i];
}

std::vector<double> OutcomeSpec::sample_all(SplitRng& rng) const {
  std::vector<double> out(means.size());
  for (std::size_t a = 0; a < means.size(); ++a) {
    if (family == OutcomeFamily::kBernoulli) {
      out[a] = rng.next_unit() < means[a] ? 1.0 : 0.0;
    } else {
      out[a] = means[a] + sds[a] * rng.next_normal();
    }
  }
  return out;
}

void ArmDelaySpec::validate() const {
  if (!(censor_prob >= 0.0 && censor_prob <= 1.0)) {
    throw ConfigError("delays: censor_prob must lie in [0,1]");
  }
  switch (kind) {
    case FiniteDelayKind::kZero:
      break;
    case FiniteDelayKind::kNegativeBinomial:
      if (!(nb_r > 0.0) || !std::isfinite(nb_r)) {
        throw ConfigError("delays: negative_binomial r must be > 0");
      }
      if (!(nb_p > 0.0 && nb_p < 1.0)) {
        throw ConfigError("delays: negative_binomial p must lie in (0,1)");
      }
      break;
    case FiniteDelayKind::kRoundedPareto:
      if (!(pareto_shape > 0.0) || !std::isfinite(pareto_shape)) {
        throw ConfigError("delays: rounded_pareto shape must be > 0");
      }
      if (!(pareto_scale > 0.0) || !std::isfinite(pareto_scale)) {
        throw ConfigError("delays: rounded_pareto scale must be > 0");
      }
      break;
  }
}

double ArmDelaySpec::finite_mass_at_zero() const {
  switch (kind) {
    case FiniteDelayKind::kZero:
      return 1.0;
    case FiniteDelayKind::kNegativeBinomial:
      return std::pow(nb_p, nb_r);
    case FiniteDelayKind::kRoundedPareto:
      // D = floor(X - x_m) for X ~ Pareto(x_m, beta), so
      // P{D = 0} = 1 - (x_m / (x_m + 1))^beta > 0.
      return 1.0 - std::pow(pareto_scale / (pareto_scale + 1.0), pareto_shape);
  }
  return 0.0;
}

double ArmDelaySpec::prob_delay_le(std::int64_t d) const {
  if (d < 0) return 0.0;
  const double scale = prob_finite();
  switch (kind) {
    case FiniteDelayKind::kZero:
      return scale;
    case FiniteDelayKind::kRoundedPareto:
      return scale * (1.0 - std::pow(pareto_scale / (pareto_scale + static_cast<double>(d) + 1.0),
                                     pareto_shape));
    case FiniteDelayKind::kNegativeBinomial: {
      double pmf = std::pow(nb_p, nb_r);
      double cdf = pmf;
      for (std::int64_t k = 0; k < d && k < kFiniteDelayCap; ++k) {
        pmf *= (1.0 - nb_p) * (static_cast<double>(k) + nb_r) / (static_cast<double>(k) + 1.0);
        cdf += pmf;
      }
      return scale * std::min(cdf, 1.0);
    }
  }
  return 0.0;
}

std::vector<double> ArmDelaySpec::prob_delay_le_table(int max_d) const {
  std::vector<double> table(static_cast<std::size_t>(max_d) + 1, 0.0);
  const double scale = prob_finite();
  switch (kind) {
    case FiniteDelayKind::kZero:
      for (auto& v : table) v = scale;
      break;
    case FiniteDelayKind::kRoundedPareto:
      for (int d = 0; d <= max_d; ++d) {
        table[static_cast<std::size_t>(d)] =
            scale * (1.0 - std::pow(pareto_scale / (pareto_scale + d + 1.0), pareto_shape));
      }
      break;
    case FiniteDelayKind::kNegativeBinomial: {
      double pmf = std::pow(nb_p, nb_r);
      double cdf = pmf;
      table[0] = scale * std::min(cdf, 1.0);
      for (int d = 1; d <= max_d; ++d) {
        pmf *= (1.0 - nb_p) * (static_cast<double>(d) - 1.0 + nb_r) / static_cast<double>(d);
        cdf += pmf;
        table[static_cast<std::size_t>(d)] = scale * std::min(cdf, 1.0);
      }
      break;
    }
  }
  return table;
}

void DelaySpec::validate() const {
  if (arms.empty()) throw ConfigError("delays: at least one arm required");
  for (const auto& a : arms) a.validate();
}

DelayValue sample_delay(SplitRng& rng, const ArmDelaySpec& spec) {
  spec.validate();
  if (spec.censor_prob >= 1.0) return kDelayNever;
  if (spec.censor_prob > 0.0 && rng.next_unit() < spec.censor_prob) {
    return kDelayNever;
  }
  switch (spec.kind) {
    case FiniteDelayKind::kZero:
      return 0;
    case FiniteDelayKind::kRoundedPareto: {
      const double u = rng.next_unit();
      const double x = spec.pareto_scale * std::pow(u, -1.0 / spec.pareto_shape);
      const double d = std::floor(x - spec.pareto_scale);
      if (!(d < static_cast<double>(kFiniteDelayCap))) {
        return static_cast<DelayValue>(kFiniteDelayCap);
      }
      return static_cast<DelayValue>(d);
    }
    case FiniteDelayKind::kNegativeBinomial: {
      // Inverse transform on the term-by-term CDF.
      const double u = rng.next_unit();
      double pmf = std::pow(spec.nb_p, spec.nb_r);
      double cdf = pmf;
      std::int64_t d = 0;
      while (u > cdf && d < kFiniteDelayCap) {
        pmf *= (1.0 - spec.nb_p) * (static_cast<double>(d) + spec.nb_r) /
               (static_cast<double>(d) + 1.0);
        cdf += pmf;
        ++d;
      }
      return static_cast<DelayValue>(d);
    }
  }
  return 0;
}

DelayValue sample_delay(SplitRng& rng, const DelaySpec& spec, Arm arm) {
  if (arm < 0 || arm >= spec.arm_count()) {
    throw ConfigError("sample_delay: arm index out of range");
  }
  return sample_delay(rng, spec.arms[static_cast<std::size_t>(arm)]);
}

void Trajectory::validate() const {
  if (static_cast<int>(records.size()) != horizon) {
    throw DataError("trajectory: record count does not match horizon");
  }
  const int K = arms();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const std::string at = "trajectory record t=" + std::to_string(i + 1);
    if (rec.t != static_cast<int>(i) + 1) {
      throw DataError(at + ": time indices must be 1..T without gaps");
    }
    if (static_cast<int>(rec.propensities.size()) != K ||
        static_cast<int>(rec.weights.size()) != K) {
      throw DataError(at + ": inconsistent arm count");
    }
    if (rec.action < 0 || rec.action >= K) {
      throw DataError(at + ": action out of range");
    }
    double sum = 0.0;
    for (double p : rec.propensities) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw DataError(at + ": propensities must be finite and >= 0");
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      throw DataError(at + ": propensities must sum to 1 within 1e-12");
    }
    if (!(rec.propensities[static_cast<std::size_t>(rec.action)] > 0.0)) {
      throw DataError(at + ": played arm must have positive propensity");
    }
    for (double h : rec.weights) {
      if (!(h >= 0.0) || !std::isfinite(h)) {
        throw DataError(at + ": weights must be finite and >= 0");
      }
    }
    if (!std::isfinite(rec.outcome)) {
      throw DataError(at + ": outcome must be finite");
    }
  }
}

Arm sample_action(SplitRng& rng, const std::vector<double>& propensities) {
  const double u = rng.next_unit();
  double cum = 0.0;
  for (std::size_t a = 0; a < propensities.size(); ++a) {
    cum += propensities[a];
    if (u < cum) return static_cast<Arm>(a);
  }
  return static_cast<Arm>(propensities.size()) - 1;
}

std::vector<int> arrivals_up_to(const Trajectory& traj, int t_cut) {
  if (t_cut < 0 || t_cut > traj.horizon) {
    throw std::invalid_argument("arrivals_up_to: t_cut must lie in [0, horizon]");
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    if (delay_is_censored(rec.delay)) continue;
    if (static_cast<std::uint64_t>(rec.t) + rec.delay <= static_cast<std::uint64_t>(t_cut)) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

TrajectoryRecord step(EnvStreams& streams, int t, const PolicyState& state,
                      const OutcomeSpec& outcomes, const DelaySpec& delays,
                      const PolicyConfig& policy, WeightScheme scheme) {
  TrajectoryRecord rec;
  rec.t = t;
  rec.propensities = policy_propensities(state, t, policy);
  rec.weights = compute_weights(rec.propensities, scheme);
  rec.action = sample_action(streams.action, rec.propensities);
  rec.delay = sample_delay(streams.delay, delays, rec.action);
  rec.potential_outcomes = outcomes.sample_all(streams.outcome);
  rec.outcome = rec.potential_outcomes[static_cast<std::size_t>(rec.action)];
  return rec;
}

Trajectory simulate_trajectory(const OutcomeSpec& outcomes, const DelaySpec& delays,
                               const PolicyConfig& policy, WeightScheme scheme,
                               int horizon, std::uint64_t base_seed,
                               std::uint64_t replication) {
  if (horizon < 1) throw ConfigError("simulate_trajectory: horizon must be >= 1");
  outcomes.validate();
  delays.validate();
  if (delays.arm_count() != outcomes.arms()) {
    throw ConfigError("simulate_trajectory: delay and outcome arm counts differ");
  }
  policy.validate(outcomes.arms(), outcomes.family);

  EnvStreams streams = EnvStreams::derive(base_seed, replication);
  PolicyState state(policy, outcomes.arms());

  Trajectory traj;
  traj.horizon = horizon;
  traj.records.reserve(static_cast<std::size_t>(horizon));

  // due[tau] holds record indices whose outcome arrives at calendar time tau;
  // they become visible to the policy from step tau + 1 on.
  std::vector<std::vector<int>> due(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    if (t >= 2) {
      state.update_on_arrivals(traj, due[static_cast<std::size_t>(t - 1)]);
    }
    traj.records.push_back(step(streams, t, state, outcomes, delays, policy, scheme));
    const auto& rec = traj.records.back();
    if (!delay_is_censored(rec.delay)) {
      const std::uint64_t arrive = static_cast<std::uint64_t>(rec.t) + rec.delay;
      if (arrive < static_cast<std::uint64_t>(horizon)) {
        due[static_cast<std::size_t>(arrive)].push_back(t - 1);
      }
    }
  }
  return traj;
}

}  // namespace dbi
