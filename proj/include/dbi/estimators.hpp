#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dbi/env.hpp"

namespace dbi {

// Inverse-propensity-weighted arrival indicator:
//   gamma_t(a) = 1{A_t = a, D_t <= T - t} / pi_t(a).
// Censored records never satisfy the indicator. A record that satisfies the
// indicator with non-positive propensity is a positivity violation.
double gamma_value(const TrajectoryRecord& rec, Arm arm, int horizon);

struct OutcomeModelOptions {
  double clip = 1e6;      // |mu_hat| is clamped to this bound
  double fallback = 0.0;  // value before the first arrival on an arm
};

// mu_hat[t-1][a]: clipped running mean of arm-a outcomes arrived by t - 1,
// or the fallback while the arm has no arrivals. Measurable with respect to
// the arrival history, never the full log.
using OutcomeModel = std::vector<std::vector<double>>;
OutcomeModel outcome_model_sequence(const Trajectory& traj,
                                    OutcomeModelOptions options = {});

// Convenience constant model (used by reduction oracles and tests).
OutcomeModel constant_outcome_model(const Trajectory& traj, double value);

// Delay-adjusted, adaptively weighted, self-normalized AIPW point estimate
// for one arm:
//   sum_t h (Y - mu_hat) gamma / sum_t h gamma + sum_t h mu_hat / sum_t h.
// Undefined (nullopt) when no arm-a outcome was observed by the horizon.
std::optional<double> daipw_arm(const Trajectory& traj, Arm arm,
                                const OutcomeModel& mu_hat);

// Estimated probability of a finite delay:
//   p_hat(a) = sum_t h gamma / sum_t h.
// Deliberately not clamped to [0,1]; finite-sample values can exceed 1.
double p_hat(const Trajectory& traj, Arm arm);

// Variance estimate for the DAIPW arm estimate:
//   sum_t h^2 ((Y - q_hat) gamma)^2 / (p_hat sum_t h)^2.
// Undefined when p_hat = 0 (nothing observed).
std::optional<double> variance_hat(const Trajectory& traj, Arm arm, double q_hat,
                                   double p_hat_value);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Two-sided normal interval q_hat +- z_{alpha/2} sqrt(v_hat).
Interval confidence_interval(double q_hat, double v_hat, double alpha_level);

enum class EstimatorFamily { kDaipw, kMean, kNh, kNh0 };

const char* estimator_name(EstimatorFamily family);
std::optional<EstimatorFamily> estimator_from_name(const std::string& name);

// NH0 normalization: kFlat divides by the horizon, kAdaptive self-normalizes
// by the summed adaptive weights.
enum class Nh0Mode { kFlat, kAdaptive };

// Sample mean of observed arm-a outcomes. Undefined when none observed.
std::optional<double> baseline_mean(const Trajectory& traj, Arm arm);

// Non-self-normalized IPW estimate without delay adjustment:
//   kFlat:     T^-1 sum_t Y gamma
//   kAdaptive: sum_t h gamma Y / sum_t h
double baseline_nh0(const Trajectory& traj, Arm arm, Nh0Mode mode);

// Adaptively weighted, outcome-adjusted, non-self-normalized estimate:
//   sum_t h [(Y - mu_hat) gamma + mu_hat] / sum_t h.
double baseline_nh(const Trajectory& traj, Arm arm, const OutcomeModel& mu_hat);

// One arm's estimate with uncertainty for a given family. Undefined
// estimates are reported as such, never as NaN.
struct ArmEstimate {
  bool defined = false;
  double q_hat = 0.0;
  double p_hat = 0.0;
  double v_hat = 0.0;
  Interval ci;
};

ArmEstimate estimate_arm(const Trajectory& traj, Arm arm, EstimatorFamily family,
                         const OutcomeModel& mu_hat, Nh0Mode nh0_mode,
                         double ci_alpha);

struct ContrastEstimate {
  bool defined = false;
  std::vector<double> weights;  // w*, one entry per arm
  double q_hat = 0.0;
  double v_hat = 0.0;
  Interval ci;
};

// Linear contrast sum_a w(a) q_hat(a) with variance sum_a w(a)^2 v_hat(a)
// (arms are asymptotically uncorrelated). Undefined when any arm with
// nonzero weight is undefined.
ContrastEstimate contrast(const std::vector<ArmEstimate>& arm_estimates,
                          const std::vector<double>& w, double ci_alpha);

// Per-family report over all arms and requested contrasts.
struct EstimateReport {
  EstimatorFamily family = EstimatorFamily::kDaipw;
  std::vector<ArmEstimate> arms;
  std::vector<ContrastEstimate> contrasts;
};

std::vector<EstimateReport> evaluate_trajectory(
    const Trajectory& traj, const std::vector<EstimatorFamily>& families,
    const std::vector<std::vector<double>>& contrasts, double ci_alpha,
    Nh0Mode nh0_mode, OutcomeModelOptions model_options = {});

}  // namespace dbi
