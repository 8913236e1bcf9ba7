#include "dbi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dbi/errors.hpp"
#include "dbi/special.hpp"

namespace dbi {

double gamma_value(const TrajectoryRecord& rec, Arm arm, int horizon) {
  const bool observed = rec.action == arm && !delay_is_censored(rec.delay) &&
                        rec.delay <= static_cast<std::uint64_t>(horizon - rec.t);
  if (!observed) return 0.0;
  const double pi = rec.propensities[static_cast<std::size_t>(arm)];
  if (!(pi > 0.0)) {
    throw DataError("gamma: played arm observed with non-positive propensity at t=" +
                    std::to_string(rec.t));
  }
  return 1.0 / pi;
}

OutcomeModel outcome_model_sequence(const Trajectory& traj,
                                    OutcomeModelOptions options) {
  if (!(options.clip > 0.0)) {
    throw ConfigError("outcome model: clip bound must be > 0");
  }
  const int T = traj.horizon;
  const int K = traj.arms();
  OutcomeModel mu(static_cast<std::size_t>(T),
                  std::vector<double>(static_cast<std::size_t>(K), options.fallback));

  std::vector<std::vector<int>> due(static_cast<std::size_t>(std::max(T, 1)));
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    if (delay_is_censored(rec.delay)) continue;
    const std::uint64_t arrive = static_cast<std::uint64_t>(rec.t) + rec.delay;
    if (arrive < static_cast<std::uint64_t>(T)) {
      due[static_cast<std::size_t>(arrive)].push_back(static_cast<int>(i));
    }
  }

  std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (int t = 1; t <= T; ++t) {
    if (t >= 2) {
      for (int idx : due[static_cast<std::size_t>(t - 1)]) {
        const auto& rec = traj.records[static_cast<std::size_t>(idx)];
        sums[static_cast<std::size_t>(rec.action)] += rec.outcome;
        counts[static_cast<std::size_t>(rec.action)] += 1;
      }
    }
    for (int a = 0; a < K; ++a) {
      const auto ai = static_cast<std::size_t>(a);
      if (counts[ai] > 0) {
        mu[static_cast<std::size_t>(t - 1)][ai] =
            std::clamp(sums[ai] / counts[ai], -options.clip, options.clip);
      }
    }
  }
  return mu;
}

OutcomeModel constant_outcome_model(const Trajectory& traj, double value) {
  return OutcomeModel(static_cast<std::size_t>(traj.horizon),
                      std::vector<double>(static_cast<std::size_t>(traj.arms()), value));
}

std::optional<double> daipw_arm(const Trajectory& traj, Arm arm,
                                const OutcomeModel& mu_hat) {
  double num_ipw = 0.0, den_ipw = 0.0;
  double num_model = 0.0, den_model = 0.0;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    const double h = rec.weights[static_cast<std::size_t>(arm)];
    const double g = gamma_value(rec, arm, traj.horizon);
    const double m = mu_hat[i][static_cast<std::size_t>(arm)];
    num_ipw += h * (rec.outcome - m) * g;
    den_ipw += h * g;
    num_model += h * m;
    den_model += h;
  }
  if (!(den_ipw > 0.0) || !(den_model > 0.0)) return std::nullopt;
  return num_ipw / den_ipw + num_model / den_model;
}

double p_hat(const Trajectory& traj, Arm arm) {
  double num = 0.0, den = 0.0;
  for (const auto& rec : traj.records) {
    const double h = rec.weights[static_cast<std::size_t>(arm)];
    num += h * gamma_value(rec, arm, traj.horizon);
    den += h;
  }
  return den > 0.0 ? num / den : 0.0;
}

std::optional<double> variance_hat(const Trajectory& traj, Arm arm, double q_hat,
                                   double p_hat_value) {
  if (!(p_hat_value > 0.0)) return std::nullopt;
  double num = 0.0, sum_h = 0.0;
  for (const auto& rec : traj.records) {
    const double h = rec.weights[static_cast<std::size_t>(arm)];
    sum_h += h;
    const double g = gamma_value(rec, arm, traj.horizon);
    if (g > 0.0) {
      const double term = h * (rec.outcome - q_hat) * g;
      num += term * term;
    }
  }
  const double den = p_hat_value * sum_h;
  return num / (den * den);
}

Interval confidence_interval(double q_hat, double v_hat, double alpha_level) {
  if (!(v_hat >= 0.0)) throw DataError("confidence_interval: variance must be >= 0");
  const double half = z_upper_halfalpha(alpha_level) * std::sqrt(v_hat);
  return Interval{q_hat - half, q_hat + half};
}

const char* estimator_name(EstimatorFamily family) {
  switch (family) {
    case EstimatorFamily::kDaipw: return "daipw";
    case EstimatorFamily::kMean: return "mean";
    case EstimatorFamily::kNh: return "nh";
    case EstimatorFamily::kNh0: return "nh0";
  }
  return "unknown";
}

std::optional<EstimatorFamily> estimator_from_name(const std::string& name) {
  if (name == "daipw") return EstimatorFamily::kDaipw;
  if (name == "mean") return EstimatorFamily::kMean;
  if (name == "nh") return EstimatorFamily::kNh;
  if (name == "nh0") return EstimatorFamily::kNh0;
  return std::nullopt;
}

std::optional<double> baseline_mean(const Trajectory& traj, Arm arm) {
  double sum = 0.0;
  int n = 0;
  for (const auto& rec : traj.records) {
    if (rec.action == arm && !delay_is_censored(rec.delay) &&
        rec.delay <= static_cast<std::uint64_t>(traj.horizon - rec.t)) {
      sum += rec.outcome;
      n += 1;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

double baseline_nh0(const Trajectory& traj, Arm arm, Nh0Mode mode) {
  if (mode == Nh0Mode::kFlat) {
    double sum = 0.0;
    for (const auto& rec : traj.records) {
      sum += rec.outcome * gamma_value(rec, arm, traj.horizon);
    }
    return sum / traj.horizon;
  }
  double num = 0.0, den = 0.0;
  for (const auto& rec : traj.records) {
    const double h = rec.weights[static_cast<std::size_t>(arm)];
    num += h * gamma_value(rec, arm, traj.horizon) * rec.outcome;
    den += h;
  }
  return den > 0.0 ? num / den : 0.0;
}

double baseline_nh(const Trajectory& traj, Arm arm, const OutcomeModel& mu_hat) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    const double h = rec.weights[static_cast<std::size_t>(arm)];
    const double m = mu_hat[i][static_cast<std::size_t>(arm)];
    num += h * ((rec.outcome - m) * gamma_value(rec, arm, traj.horizon) + m);
    den += h;
  }
  return den > 0.0 ? num / den : 0.0;
}

namespace {

// Sandwich variance for the self-weighted score averages of the NH / NH0
// families: sum w_t^2 (s_t - q)^2 / (sum w_t)^2.
double score_average_variance(const std::vector<double>& weights,
                              const std::vector<double>& scores, double q) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double d = scores[i] - q;
    num += weights[i] * weights[i] * d * d;
    den += weights[i];
  }
  return den > 0.0 ? num / (den * den) : 0.0;
}

ArmEstimate daipw_estimate(const Trajectory& traj, Arm arm, const OutcomeModel& mu,
                           double ci_alpha) {
  ArmEstimate est;
  est.p_hat = p_hat(traj, arm);
  const auto q = daipw_arm(traj, arm, mu);
  if (!q) return est;
  const auto v = variance_hat(traj, arm, *q, est.p_hat);
  if (!v) return est;
  est.defined = true;
  est.q_hat = *q;
  est.v_hat = *v;
  est.ci = confidence_interval(*q, *v, ci_alpha);
  return est;
}

ArmEstimate mean_estimate(const Trajectory& traj, Arm arm, double ci_alpha) {
  ArmEstimate est;
  double sum = 0.0, sum_sq = 0.0;
  int n = 0;
  int observed_any = 0;
  for (const auto& rec : traj.records) {
    observed_any += gamma_value(rec, arm, traj.horizon) > 0.0 ? 1 : 0;
    if (rec.action == arm && !delay_is_censored(rec.delay) &&
        rec.delay <= static_cast<std::uint64_t>(traj.horizon - rec.t)) {
      sum += rec.outcome;
      n += 1;
    }
  }
  est.p_hat = static_cast<double>(observed_any) / traj.horizon;
  if (n == 0) return est;
  const double q = sum / n;
  for (const auto& rec : traj.records) {
    if (rec.action == arm && !delay_is_censored(rec.delay) &&
        rec.delay <= static_cast<std::uint64_t>(traj.horizon - rec.t)) {
      sum_sq += (rec.outcome - q) * (rec.outcome - q);
    }
  }
  est.defined = true;
  est.q_hat = q;
  est.v_hat = n > 1 ? sum_sq / (n - 1) / n : 0.0;
  est.ci = confidence_interval(q, est.v_hat, ci_alpha);
  return est;
}

ArmEstimate nh_estimate(const Trajectory& traj, Arm arm, const OutcomeModel& mu,
                        double ci_alpha) {
  ArmEstimate est;
  est.p_hat = p_hat(traj, arm);
  const double q = baseline_nh(traj, arm, mu);
  std::vector<double> weights, scores;
  weights.reserve(traj.records.size());
  scores.reserve(traj.records.size());
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    const double m = mu[i][static_cast<std::size_t>(arm)];
    weights.push_back(rec.weights[static_cast<std::size_t>(arm)]);
    scores.push_back((rec.outcome - m) * gamma_value(rec, arm, traj.horizon) + m);
  }
  est.defined = true;
  est.q_hat = q;
  est.v_hat = score_average_variance(weights, scores, q);
  est.ci = confidence_interval(q, est.v_hat, ci_alpha);
  return est;
}

ArmEstimate nh0_estimate(const Trajectory& traj, Arm arm, Nh0Mode mode,
                         double ci_alpha) {
  ArmEstimate est;
  const double q = baseline_nh0(traj, arm, mode);
  std::vector<double> weights, scores;
  weights.reserve(traj.records.size());
  scores.reserve(traj.records.size());
  for (const auto& rec : traj.records) {
    const double w = mode == Nh0Mode::kFlat
                         ? 1.0
                         : rec.weights[static_cast<std::size_t>(arm)];
    weights.push_back(w);
    scores.push_back(rec.outcome * gamma_value(rec, arm, traj.horizon));
  }
  if (mode == Nh0Mode::kFlat) {
    double num = 0.0;
    for (const auto& rec : traj.records) {
      num += gamma_value(rec, arm, traj.horizon) > 0.0 ? 1.0 : 0.0;
    }
    est.p_hat = num / traj.horizon;
  } else {
    est.p_hat = p_hat(traj, arm);
  }
  est.defined = true;
  est.q_hat = q;
  est.v_hat = score_average_variance(weights, scores, q);
  est.ci = confidence_interval(q, est.v_hat, ci_alpha);
  return est;
}

}  // namespace

ArmEstimate estimate_arm(const Trajectory& traj, Arm arm, EstimatorFamily family,
                         const OutcomeModel& mu_hat, Nh0Mode nh0_mode,
                         double ci_alpha) {
  switch (family) {
    case EstimatorFamily::kDaipw:
      return daipw_estimate(traj, arm, mu_hat, ci_alpha);
    case EstimatorFamily::kMean:
      return mean_estimate(traj, arm, ci_alpha);
    case EstimatorFamily::kNh:
      return nh_estimate(traj, arm, mu_hat, ci_alpha);
    case EstimatorFamily::kNh0:
      return nh0_estimate(traj, arm, nh0_mode, ci_alpha);
  }
  throw ConfigError("estimate_arm: unknown estimator family");
}

ContrastEstimate contrast(const std::vector<ArmEstimate>& arm_estimates,
                          const std::vector<double>& w, double ci_alpha) {
  if (w.size() != arm_estimates.size()) {
    throw ConfigError("contrast: weight vector does not match arm count");
  }
  ContrastEstimate est;
  est.weights = w;
  double q = 0.0, v = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    if (w[a] == 0.0) continue;
    if (!arm_estimates[a].defined) return est;  // touches an unobserved arm
    q += w[a] * arm_estimates[a].q_hat;
    v += w[a] * w[a] * arm_estimates[a].v_hat;
  }
  est.defined = true;
  est.q_hat = q;
  est.v_hat = v;
  est.ci = confidence_interval(q, v, ci_alpha);
  return est;
}

std::vector<EstimateReport> evaluate_trajectory(
    const Trajectory& traj, const std::vector<EstimatorFamily>& families,
    const std::vector<std::vector<double>>& contrasts, double ci_alpha,
    Nh0Mode nh0_mode, OutcomeModelOptions model_options) {
  const int K = traj.arms();
  const OutcomeModel mu = outcome_model_sequence(traj, model_options);
  std::vector<EstimateReport> reports;
  reports.reserve(families.size());
  for (EstimatorFamily family : families) {
    EstimateReport report;
    report.family = family;
    report.arms.reserve(static_cast<std::size_t>(K));
    for (Arm a = 0; a < K; ++a) {
      report.arms.push_back(estimate_arm(traj, a, family, mu, nh0_mode, ci_alpha));
    }
    for (const auto& w : contrasts) {
      report.contrasts.push_back(contrast(report.arms, w, ci_alpha));
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace dbi
