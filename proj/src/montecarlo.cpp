#include "dbi/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "dbi/errors.hpp"
#include "dbi/special.hpp"

namespace dbi {

void ExperimentConfig::validate() const {
  outcomes.validate();
  delays.validate();
  const int K = arms();
  if (delays.arm_count() != K) {
    throw ConfigError("config: delays must list one entry per arm");
  }
  policy.validate(K, outcomes.family);
  if (horizon < 1) throw ConfigError("config: horizon must be >= 1");
  if (replications < 1) throw ConfigError("config: replications must be >= 1");
  if (!(ci_alpha > 0.0 && ci_alpha < 1.0)) {
    throw ConfigError("config: ci_alpha must lie in (0,1)");
  }
  if (!(mu_clip > 0.0)) throw ConfigError("config: mu_clip must be > 0");
  if (estimators.empty()) throw ConfigError("config: at least one estimator required");
  for (const auto& w : contrasts) {
    if (static_cast<int>(w.size()) != K) {
      throw ConfigError("config: contrast vectors must have one weight per arm");
    }
    for (double x : w) {
      if (!std::isfinite(x)) throw ConfigError("config: contrast weights must be finite");
    }
  }
  if (log_trajectories < 0) {
    throw ConfigError("config: log_trajectories must be >= 0");
  }
}

double ExperimentConfig::true_contrast_value(std::size_t c) const {
  const auto& w = contrasts.at(c);
  double value = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    value += w[a] * outcomes.means[a];
  }
  return value;
}

Trajectory simulate_replication_trajectory(const ExperimentConfig& config, int rep) {
  return simulate_trajectory(config.outcomes, config.delays, config.policy,
                             config.weights, config.horizon, config.seed,
                             static_cast<std::uint64_t>(rep));
}

ReplicationResult run_replication(const ExperimentConfig& config, int rep) {
  const Trajectory traj = simulate_replication_trajectory(config, rep);
  ReplicationResult result;
  result.rep = rep;
  result.reports =
      evaluate_trajectory(traj, config.estimators, config.contrasts, config.ci_alpha,
                          config.nh0_mode, OutcomeModelOptions{config.mu_clip, 0.0});
  return result;
}

int resolve_worker_count(int replications) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  int workers = static_cast<int>(hw);
  if (const char* env = std::getenv("DBI_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && parsed >= 1) {
      workers = std::min<long>(workers, parsed);
    }
  }
  return std::max(1, std::min(workers, replications));
}

std::vector<ReplicationResult> run_experiment(const ExperimentConfig& config,
                                              int workers) {
  config.validate();
  const int R = config.replications;
  if (workers <= 0) workers = resolve_worker_count(R);

  std::vector<ReplicationResult> results(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) {
      results[static_cast<std::size_t>(r)] = run_replication(config, r);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return results;
}

double ks_statistic_vs_normal(std::vector<double> values) {
  if (values.empty()) throw DataError("ks_statistic: no values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double cdf = normal_cdf(values[i]);
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - cdf);
    d = std::max(d, cdf - static_cast<double>(i) / n);
  }
  return d;
}

std::vector<std::string> target_names(const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (int a = 0; a < config.arms(); ++a) {
    names.push_back("arm_" + std::to_string(a + 1));
  }
  for (std::size_t c = 0; c < config.contrasts.size(); ++c) {
    names.push_back("contrast_" + std::to_string(c + 1));
  }
  return names;
}

namespace {

struct CellSample {
  bool defined = false;
  double q = 0.0;
  double v = 0.0;
  Interval ci;
  std::optional<double> p;
};

// Extracts one (family, target) estimate per replication, in rep order.
std::vector<CellSample> collect_cell(const std::vector<ReplicationResult>& results,
                                     const ExperimentConfig& config,
                                     EstimatorFamily family, int arm_index,
                                     int contrast_index) {
  std::vector<const ReplicationResult*> ordered;
  ordered.reserve(results.size());
  for (const auto& r : results) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const ReplicationResult* a, const ReplicationResult* b) {
              return a->rep < b->rep;
            });

  std::size_t family_index = config.estimators.size();
  for (std::size_t f = 0; f < config.estimators.size(); ++f) {
    if (config.estimators[f] == family) family_index = f;
  }
  if (family_index == config.estimators.size()) {
    throw DataError("aggregate: estimator family not present in results");
  }

  std::vector<CellSample> cell;
  cell.reserve(results.size());
  for (const ReplicationResult* r : ordered) {
    const EstimateReport& report = r->reports.at(family_index);
    CellSample s;
    if (arm_index >= 0) {
      const ArmEstimate& est = report.arms.at(static_cast<std::size_t>(arm_index));
      s.defined = est.defined;
      s.q = est.q_hat;
      s.v = est.v_hat;
      s.ci = est.ci;
      s.p = est.p_hat;
    } else {
      const ContrastEstimate& est =
          report.contrasts.at(static_cast<std::size_t>(contrast_index));
      s.defined = est.defined;
      s.q = est.q_hat;
      s.v = est.v_hat;
      s.ci = est.ci;
    }
    cell.push_back(s);
  }
  return cell;
}

TargetMetrics summarize_cell(const std::vector<CellSample>& cell,
                             const std::string& target, double truth,
                             const char* family_name) {
  TargetMetrics m;
  m.target = target;
  m.true_value = truth;

  KahanSum sum_q, sum_se, sum_p;
  int defined = 0;
  int covered = 0;
  bool any_p = false;
  for (const auto& s : cell) {
    if (s.p) {
      sum_p.add(*s.p);
      any_p = true;
    }
    if (!s.defined) continue;
    ++defined;
    sum_q.add(s.q);
    sum_se.add(std::sqrt(s.v));
    if (s.ci.lo <= truth && truth <= s.ci.hi) ++covered;
  }
  if (defined == 0) {
    throw DataError(std::string("aggregate: no defined estimate for ") + family_name +
                    "/" + target);
  }
  const double mean_q = sum_q.value() / defined;
  m.bias = mean_q - truth;
  m.mean_se = sum_se.value() / defined;
  m.coverage = static_cast<double>(covered) / defined;
  m.undefined_rate =
      static_cast<double>(cell.size() - static_cast<std::size_t>(defined)) / cell.size();
  m.defined_count = defined;
  if (any_p) m.mean_p_hat = sum_p.value() / static_cast<double>(cell.size());

  KahanSum sum_sq;
  for (const auto& s : cell) {
    if (!s.defined) continue;
    sum_sq.add((s.q - mean_q) * (s.q - mean_q));
  }
  m.sd = defined > 1 ? std::sqrt(sum_sq.value() / (defined - 1)) : 0.0;

  std::vector<double> standardized;
  standardized.reserve(static_cast<std::size_t>(defined));
  for (const auto& s : cell) {
    if (s.defined && s.v > 0.0) {
      standardized.push_back((s.q - truth) / std::sqrt(s.v));
    }
  }
  m.ks_statistic = standardized.empty() ? 1.0 : ks_statistic_vs_normal(standardized);
  return m;
}

}  // namespace

const TargetMetrics& AggregateMetrics::at(EstimatorFamily family,
                                          const std::string& target) const {
  for (const auto& f : families) {
    if (f.family != family) continue;
    for (const auto& t : f.targets) {
      if (t.target == target) return t;
    }
  }
  throw DataError("metrics: no entry for " + std::string(estimator_name(family)) + "/" +
                  target);
}

AggregateMetrics aggregate(const std::vector<ReplicationResult>& results,
                           const ExperimentConfig& config) {
  if (results.empty()) throw DataError("aggregate: no replication results");
  AggregateMetrics metrics;
  metrics.replications = static_cast<int>(results.size());
  for (EstimatorFamily family : config.estimators) {
    FamilyMetrics fm;
    fm.family = family;
    for (int a = 0; a < config.arms(); ++a) {
      const auto cell = collect_cell(results, config, family, a, -1);
      fm.targets.push_back(summarize_cell(cell, "arm_" + std::to_string(a + 1),
                                          config.true_arm_value(a),
                                          estimator_name(family)));
    }
    for (std::size_t c = 0; c < config.contrasts.size(); ++c) {
      const auto cell = collect_cell(results, config, family, -1, static_cast<int>(c));
      auto tm = summarize_cell(cell, "contrast_" + std::to_string(c + 1),
                               config.true_contrast_value(c), estimator_name(family));
      tm.mean_p_hat.reset();
      fm.targets.push_back(std::move(tm));
    }
    metrics.families.push_back(std::move(fm));
  }
  return metrics;
}

namespace {

double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

DiagnosticsSummary run_diagnostics(const ExperimentConfig& config, double delta,
                                   int workers) {
  config.validate();
  if (!(delta > 0.0)) throw ConfigError("diagnose: delta must be > 0");
  const int R = config.replications;
  const int K = config.arms();
  if (workers <= 0) workers = resolve_worker_count(R);

  std::vector<Trajectory> trajectories(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) {
      trajectories[static_cast<std::size_t>(r)] =
          simulate_replication_trajectory(config, r);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  // Cross-replication reference for the A5 ratio.
  std::vector<double> reference(static_cast<std::size_t>(K), 0.0);
  std::vector<std::vector<double>> numerators(
      static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(R)));
  for (int r = 0; r < R; ++r) {
    for (int a = 0; a < K; ++a) {
      numerators[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] =
          a5_numerator(trajectories[static_cast<std::size_t>(r)], config.delays, a,
                       config.weights);
    }
  }
  for (int a = 0; a < K; ++a) {
    reference[static_cast<std::size_t>(a)] =
        a5_reference_mean(numerators[static_cast<std::size_t>(a)]);
  }

  std::vector<std::vector<ArmConditionStats>> per_rep(static_cast<std::size_t>(R));
  for (int r = 0; r < R; ++r) {
    per_rep[static_cast<std::size_t>(r)] =
        condition_diagnostics(trajectories[static_cast<std::size_t>(r)], config.delays,
                              delta, config.weights, reference)
            .arms;
  }

  DiagnosticsSummary summary;
  summary.delta = delta;
  summary.replications = R;
  summary.median_arms.resize(static_cast<std::size_t>(K));
  for (int a = 0; a < K; ++a) {
    std::vector<double> a1, a2, a3, a4, a5;
    for (int r = 0; r < R; ++r) {
      const auto& stats = per_rep[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)];
      a1.push_back(stats.a1);
      a2.push_back(stats.a2);
      a3.push_back(stats.a3);
      a4.push_back(stats.a4);
      a5.push_back(stats.a5);
    }
    auto& m = summary.median_arms[static_cast<std::size_t>(a)];
    m.a1 = median_of(a1);
    m.a2 = median_of(a2);
    m.a3 = median_of(a3);
    m.a4 = median_of(a4);
    m.a5 = median_of(a5);
  }
  return summary;
}

Histogram standardized_error_histogram(const std::vector<ReplicationResult>& results,
                                       const ExperimentConfig& config,
                                       EstimatorFamily family,
                                       const std::string& target) {
  constexpr int kBins = 50;
  Histogram hist;
  hist.counts.assign(kBins, 0);

  int arm_index = -1;
  int contrast_index = -1;
  for (int a = 0; a < config.arms(); ++a) {
    if (target == "arm_" + std::to_string(a + 1)) arm_index = a;
  }
  double truth = 0.0;
  if (arm_index >= 0) {
    truth = config.true_arm_value(arm_index);
  } else {
    for (std::size_t c = 0; c < config.contrasts.size(); ++c) {
      if (target == "contrast_" + std::to_string(c + 1)) {
        contrast_index = static_cast<int>(c);
        truth = config.true_contrast_value(c);
      }
    }
    if (contrast_index < 0) throw DataError("histogram: unknown target " + target);
  }

  const auto cell = collect_cell(results, config, family, arm_index, contrast_index);
  const double width = (hist.hi - hist.lo) / kBins;
  for (const auto& s : cell) {
    if (!s.defined || !(s.v > 0.0)) continue;
    const double z = (s.q - truth) / std::sqrt(s.v);
    if (z < hist.lo || z >= hist.hi) continue;
    const int bin = std::min(kBins - 1, static_cast<int>((z - hist.lo) / width));
    hist.counts[static_cast<std::size_t>(bin)] += 1;
  }
  return hist;
}

}  // namespace dbi
