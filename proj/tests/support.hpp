#pragma once

// Shared randomized-trajectory generator and the invariant checkers used by
// both the unit property tests and the acceptance suite.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbi/env.hpp"
#include "dbi/estimators.hpp"
#include "dbi/logio.hpp"
#include "dbi/montecarlo.hpp"
#include "dbi/policies.hpp"
#include "dbi/rng.hpp"
#include "dbi/weighting.hpp"

namespace dbi::testsupport {

struct RandomCase {
  ExperimentConfig config;
  Trajectory trajectory;
};

// A small randomized experiment: random arm count, delay mix, policy and
// horizon, plus the simulated trajectory for one replication.
inline RandomCase random_case(SplitRng& gen, bool allow_thompson = true) {
  RandomCase rc;
  auto& cfg = rc.config;
  const int K = 2 + static_cast<int>(gen.next_u64() % 3);  // 2..4 arms

  const bool bernoulli = allow_thompson && gen.next_unit() < 0.3;
  cfg.outcomes.family = bernoulli ? OutcomeFamily::kBernoulli : OutcomeFamily::kNormal;
  for (int a = 0; a < K; ++a) {
    if (bernoulli) {
      cfg.outcomes.means.push_back(0.1 + 0.8 * gen.next_unit());
    } else {
      cfg.outcomes.means.push_back(-1.0 + 3.0 * gen.next_unit());
      cfg.outcomes.sds.push_back(0.25 + 1.5 * gen.next_unit());
    }
  }

  cfg.delays.arms.resize(static_cast<std::size_t>(K));
  for (auto& arm : cfg.delays.arms) {
    arm.censor_prob = gen.next_unit() < 0.4 ? 0.6 * gen.next_unit() : 0.0;
    switch (gen.next_u64() % 3) {
      case 0:
        arm.kind = FiniteDelayKind::kZero;
        break;
      case 1:
        arm.kind = FiniteDelayKind::kNegativeBinomial;
        arm.nb_r = 0.5 + 3.0 * gen.next_unit();
        arm.nb_p = 0.2 + 0.6 * gen.next_unit();
        break;
      default:
        arm.kind = FiniteDelayKind::kRoundedPareto;
        arm.pareto_shape = 0.5 + 1.5 * gen.next_unit();
        arm.pareto_scale = 0.5 + 1.5 * gen.next_unit();
        break;
    }
  }

  if (bernoulli && K == 2 && gen.next_unit() < 0.5) {
    cfg.policy.kind = PolicyKind::kThompsonClipped;
  } else {
    cfg.policy.kind =
        gen.next_unit() < 0.5 ? PolicyKind::kEpsilonGreedy : PolicyKind::kUcbClipped;
  }
  cfg.policy.decay_alpha = 0.9 * gen.next_unit();
  cfg.policy.clip_c = 0.5 + gen.next_unit();
  cfg.weights = gen.next_unit() < 0.7 ? WeightScheme::kSqrtPropensity
                                      : WeightScheme::kConstantOne;
  cfg.horizon = 5 + static_cast<int>(gen.next_u64() % 36);  // 5..40
  cfg.replications = 1;
  cfg.seed = gen.next_u64();

  rc.trajectory = simulate_replication_trajectory(cfg, 0);
  return rc;
}

inline bool close_rel(double a, double b, double tol) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

// Scaling every weight by lambda > 0 leaves the DAIPW estimate, p_hat-based
// variance and interval unchanged (within 1e-12 relative).
inline std::optional<std::string> check_hajek_scale_invariance(const RandomCase& rc,
                                                               double lambda) {
  const Trajectory& traj = rc.trajectory;
  Trajectory scaled = traj;
  for (auto& rec : scaled.records) {
    for (auto& h : rec.weights) h *= lambda;
  }
  const OutcomeModel mu = outcome_model_sequence(traj);
  for (Arm a = 0; a < traj.arms(); ++a) {
    const auto q1 = daipw_arm(traj, a, mu);
    const auto q2 = daipw_arm(scaled, a, mu);
    if (q1.has_value() != q2.has_value()) return "definedness changed under scaling";
    if (!q1) continue;
    if (!close_rel(*q1, *q2, 1e-12)) return "q changed under weight scaling";
    const auto v1 = variance_hat(traj, a, *q1, p_hat(traj, a));
    const auto v2 = variance_hat(scaled, a, *q2, p_hat(scaled, a));
    if (!v1 || !v2) return "variance undefined where estimate defined";
    if (!close_rel(*v1, *v2, 1e-12)) return "v changed under weight scaling";
    const Interval c1 = confidence_interval(*q1, *v1, 0.05);
    const Interval c2 = confidence_interval(*q2, *v2, 0.05);
    if (!close_rel(c1.lo, c2.lo, 1e-12) || !close_rel(c1.hi, c2.hi, 1e-12)) {
      return "interval changed under weight scaling";
    }
  }
  return std::nullopt;
}

// A constant outcome model cancels exactly in the DAIPW estimate.
inline std::optional<std::string> check_mu_constant_invariance(const RandomCase& rc,
                                                               double c) {
  const Trajectory& traj = rc.trajectory;
  for (Arm a = 0; a < traj.arms(); ++a) {
    const auto q0 = daipw_arm(traj, a, constant_outcome_model(traj, 0.0));
    const auto qc = daipw_arm(traj, a, constant_outcome_model(traj, c));
    if (q0.has_value() != qc.has_value()) return "definedness depends on constant model";
    if (q0 && !close_rel(*q0, *qc, 1e-12)) return "constant model failed to cancel";
  }
  return std::nullopt;
}

// gamma(a) * gamma(a') == 0 exactly for a != a' on every record.
inline std::optional<std::string> check_gamma_orthogonality(const RandomCase& rc) {
  const Trajectory& traj = rc.trajectory;
  for (const auto& rec : traj.records) {
    for (Arm a = 0; a < traj.arms(); ++a) {
      for (Arm b = a + 1; b < traj.arms(); ++b) {
        if (gamma_value(rec, a, traj.horizon) * gamma_value(rec, b, traj.horizon) != 0.0) {
          return "two arms observed in one record";
        }
      }
    }
  }
  return std::nullopt;
}

// With clipping disabled, shifting outcomes by c shifts the estimate by c
// (the running model is rebuilt with a shifted fallback so it shifts too).
inline std::optional<std::string> check_location_equivariance(const RandomCase& rc,
                                                              double c) {
  const Trajectory& traj = rc.trajectory;
  Trajectory shifted = traj;
  for (auto& rec : shifted.records) {
    rec.outcome += c;
    for (auto& y : rec.potential_outcomes) y += c;
  }
  const double unclipped = 1e300;
  const OutcomeModel mu0 = outcome_model_sequence(traj, {unclipped, 0.0});
  const OutcomeModel muc = outcome_model_sequence(shifted, {unclipped, c});
  for (Arm a = 0; a < traj.arms(); ++a) {
    const auto q0 = daipw_arm(traj, a, mu0);
    const auto qc = daipw_arm(shifted, a, muc);
    if (q0.has_value() != qc.has_value()) return "definedness changed under shift";
    if (q0 && !close_rel(*q0 + c, *qc, 1e-10)) return "estimate did not shift by c";
  }
  return std::nullopt;
}

// Every logged propensity respects the exploration floor eps_t / (K-1).
inline std::optional<std::string> check_propensity_floor(const RandomCase& rc) {
  const Trajectory& traj = rc.trajectory;
  const int K = traj.arms();
  for (const auto& rec : traj.records) {
    const double floor = rc.config.policy.epsilon_at(rec.t, K) / (K - 1);
    for (double p : rec.propensities) {
      if (!(p >= floor)) return "propensity below the exploration floor";
    }
  }
  return std::nullopt;
}

// CSV write-then-read reproduces every field exactly.
inline std::optional<std::string> check_log_round_trip(const RandomCase& rc) {
  const Trajectory& traj = rc.trajectory;
  std::stringstream buffer;
  write_trajectory_csv(traj, buffer);
  const Trajectory parsed = read_trajectory_csv(buffer);
  if (parsed.records.size() != traj.records.size()) return "record count changed";
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& a = traj.records[i];
    const auto& b = parsed.records[i];
    if (a.t != b.t || a.action != b.action || a.delay != b.delay) {
      return "t/action/delay changed";
    }
    if (a.outcome != b.outcome) return "outcome changed";
    if (a.propensities != b.propensities) return "propensities changed";
    if (a.weights != b.weights) return "weights changed";
  }
  return std::nullopt;
}

}  // namespace dbi::testsupport
