#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dbi/env.hpp"
#include "dbi/estimators.hpp"
#include "dbi/policies.hpp"
#include "dbi/weighting.hpp"

namespace dbi {

// Full description of one replication study.
struct ExperimentConfig {
  OutcomeSpec outcomes;
  DelaySpec delays;
  PolicyConfig policy;
  WeightScheme weights = WeightScheme::kSqrtPropensity;
  int horizon = 5000;
  int replications = 2000;
  std::uint64_t seed = 1;
  std::vector<std::vector<double>> contrasts;
  double ci_alpha = 0.05;
  Nh0Mode nh0_mode = Nh0Mode::kFlat;
  double mu_clip = 1e6;
  std::vector<EstimatorFamily> estimators = {EstimatorFamily::kDaipw,
                                             EstimatorFamily::kMean,
                                             EstimatorFamily::kNh,
                                             EstimatorFamily::kNh0};
  int log_trajectories = 0;  // write the first N trajectory logs

  int arms() const { return outcomes.arms(); }
  void validate() const;  // throws ConfigError

  // True targets from the outcome law: per-arm means, then one value per
  // contrast.
  double true_arm_value(Arm a) const { return outcomes.true_mean(a); }
  double true_contrast_value(std::size_t c) const;
};

struct ReplicationResult {
  int rep = 0;
  std::vector<EstimateReport> reports;
};

// One trajectory plus all estimator families; deterministic in
// (config, rep).
ReplicationResult run_replication(const ExperimentConfig& config, int rep);
Trajectory simulate_replication_trajectory(const ExperimentConfig& config, int rep);

// Worker count: hardware concurrency capped by the DBI_THREADS environment
// variable and by the replication count.
int resolve_worker_count(int replications);

// All replications, run across a worker pool. The returned vector is indexed
// by replication, so downstream aggregation is order-deterministic.
std::vector<ReplicationResult> run_experiment(const ExperimentConfig& config,
                                              int workers = 0);

struct TargetMetrics {
  std::string target;  // "arm_1".. or "contrast_1"..
  double true_value = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  double ks_statistic = 0.0;
  double undefined_rate = 0.0;
  int defined_count = 0;
  std::optional<double> mean_p_hat;  // arm targets only
};

struct FamilyMetrics {
  EstimatorFamily family = EstimatorFamily::kDaipw;
  std::vector<TargetMetrics> targets;
};

struct AggregateMetrics {
  int replications = 0;
  std::vector<FamilyMetrics> families;

  const TargetMetrics& at(EstimatorFamily family, const std::string& target) const;
};

// Replication-order-deterministic reduction with compensated summation.
// A (family, target) cell with zero defined replications is an aggregation
// error (DataError).
AggregateMetrics aggregate(const std::vector<ReplicationResult>& results,
                           const ExperimentConfig& config);

// Kolmogorov-Smirnov sup-distance between the empirical distribution of the
// values and the standard normal CDF.
double ks_statistic_vs_normal(std::vector<double> values);

// Fixed-bin histogram of standardized errors (q - truth) / sqrt(v).
struct Histogram {
  double lo = -4.0;
  double hi = 4.0;
  std::vector<std::int64_t> counts;  // 50 equal-width bins
};

Histogram standardized_error_histogram(const std::vector<ReplicationResult>& results,
                                       const ExperimentConfig& config,
                                       EstimatorFamily family,
                                       const std::string& target);

// Names aligned with metrics targets: arm_1..arm_K, contrast_1..contrast_C.
std::vector<std::string> target_names(const ExperimentConfig& config);

// Condition diagnostics across the config's replications: per-arm medians of
// the per-replication statistics, with A5 reported as the per-replication
// numerator over its cross-replication mean.
struct DiagnosticsSummary {
  double delta = 0.2;
  int replications = 0;
  std::vector<ArmConditionStats> median_arms;
};

DiagnosticsSummary run_diagnostics(const ExperimentConfig& config, double delta,
                                   int workers = 0);

}  // namespace dbi
