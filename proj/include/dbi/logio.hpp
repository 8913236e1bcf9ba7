#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dbi/estimators.hpp"
#include "dbi/montecarlo.hpp"

namespace dbi {

// Reals serialized with 17 significant digits (exact round trip for 64-bit
// floats).
std::string format_real17(double x);

// Trajectory log CSV: header t,action,delay,outcome,pi_1..pi_K,h_1..h_K.
// Actions are 1-based arm ids; delay is a non-negative integer or the
// literal token `inf` for censored outcomes.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv_file(const Trajectory& traj, const std::string& path);

// Parses and validates a trajectory log. Malformed rows raise DataError with
// the 1-based line number.
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv_file(const std::string& path);

struct EvaluateOptions {
  // nullopt keeps the logged h columns; otherwise h is recomputed from the
  // logged propensities under the given scheme.
  std::optional<WeightScheme> reweight;
  std::vector<std::vector<double>> contrasts;
  std::vector<EstimatorFamily> families = {EstimatorFamily::kDaipw,
                                           EstimatorFamily::kMean,
                                           EstimatorFamily::kNh,
                                           EstimatorFamily::kNh0};
  double ci_alpha = 0.05;
  Nh0Mode nh0_mode = Nh0Mode::kFlat;
  OutcomeModelOptions model;
  bool zero_outcome_model = false;  // force mu_hat identically 0
};

// Off-line re-evaluation: recomputes every estimator family from the logged
// tuples (t, A, D, Y, pi, h) alone.
std::vector<EstimateReport> evaluate_log(Trajectory traj, const EvaluateOptions& options);
std::vector<EstimateReport> evaluate_log_file(const std::string& path,
                                              const EvaluateOptions& options);

// Results CSV: one row per (replication, estimator, target) with columns
// rep,estimator,target,qhat,phat,vhat,ci_lo,ci_hi,defined. Undefined
// estimates leave the value columns empty.
void write_results_csv(std::ostream& out, const std::vector<ReplicationResult>& results,
                       const ExperimentConfig& config);
void write_estimates_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
                         int rep, bool header);

void write_metrics_json(std::ostream& out, const AggregateMetrics& metrics,
                        const ExperimentConfig& config);

// Histogram CSV with columns bin_lo,bin_hi,count.
void write_histogram_csv(std::ostream& out, const Histogram& hist);

}  // namespace dbi
