#pragma once

#include <span>
#include <vector>

namespace dbi {

struct Trajectory;
struct DelaySpec;

enum class WeightScheme : int {
  kSqrtPropensity,  // h_t(a) = sqrt(pi_t(a))
  kConstantOne,     // h_t(a) = 1
};

std::vector<double> compute_weights(const std::vector<double>& propensities,
                                    WeightScheme scheme);

// Plug-in statistics for the five rate conditions behind the estimator's
// large-sample guarantees. All expectations are replaced by realized
// trajectory quantities; delay probabilities come exactly from the true
// delay law, so these diagnostics are available in simulation mode only.
struct ArmConditionStats {
  double a1 = 0.0;  // max_t h_t / sum_t h_t                       (negligible weights)
  double a2 = 0.0;  // sum h * P{T-t < D < inf} / sqrt(S2)          (delay tails)
  double a3 = 0.0;  // S2 / (sum h)^2                               (infinite sampling)
  double a4 = 0.0;  // sum h^(2+d) pi^-(1+d) F_t / S2^((2+d)/2)     (Lyapunov)
  double a5 = 0.0;  // S2, or S2 / reference in ratio mode          (variance convergence)
};
// with S2 = sum_t (h_t^2 / pi_t) * P{D <= T-t}.

struct ConditionReport {
  double delta = 0.2;
  bool a5_is_ratio = false;
  std::vector<ArmConditionStats> arms;
};

// The A5 numerator S2 for one arm; its cross-replication mean is the
// reference denominator of the A5 ratio.
double a5_numerator(const Trajectory& traj, const DelaySpec& delays, int arm,
                    WeightScheme scheme);

// Compensated mean of per-replication numerators, returning the common value
// exactly when all replications agree (the sqrt-propensity case).
double a5_reference_mean(std::span<const double> numerators);

// Single-trajectory diagnostics. A5 reports the raw numerator unless a
// per-arm reference (Monte Carlo mean across replications) is supplied, in
// which case it reports numerator / reference. For the sqrt-propensity
// scheme, h^2 / pi reduces to 1 and is evaluated as such, so the A5 ratio is
// exactly 1. delta must be > 0.
ConditionReport condition_diagnostics(const Trajectory& traj, const DelaySpec& delays,
                                      double delta, WeightScheme scheme,
                                      std::span<const double> a5_reference = {});

}  // namespace dbi
