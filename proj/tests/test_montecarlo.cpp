#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dbi/errors.hpp"
#include "dbi/montecarlo.hpp"
#include "dbi/rng.hpp"

using namespace dbi;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.outcomes.family = OutcomeFamily::kNormal;
  cfg.outcomes.means = {1.0, 0.5};
  cfg.outcomes.sds = {1.0, 1.0};
  cfg.delays.arms.resize(2);
  cfg.delays.arms[0].censor_prob = 0.5;
  cfg.policy.decay_alpha = 0.3;
  cfg.horizon = 60;
  cfg.replications = 24;
  cfg.seed = 1234;
  cfg.contrasts = {{1.0, -1.0}};
  return cfg;
}

}  // namespace

TEST_CASE("minimal horizon: one record, at most one arm defined") {
  ExperimentConfig cfg = small_config();
  cfg.horizon = 1;
  cfg.replications = 1;
  cfg.contrasts.clear();
  const auto result = run_replication(cfg, 0);
  REQUIRE(result.reports.size() == 4);
  const auto& daipw = result.reports[0];
  const int defined =
      (daipw.arms[0].defined ? 1 : 0) + (daipw.arms[1].defined ? 1 : 0);
  CHECK(defined <= 1);
}

TEST_CASE("run_replication is byte-identical across calls") {
  const ExperimentConfig cfg = small_config();
  const auto a = run_replication(cfg, 3);
  const auto b = run_replication(cfg, 3);
  REQUIRE(a.reports.size() == b.reports.size());
  for (std::size_t f = 0; f < a.reports.size(); ++f) {
    for (std::size_t arm = 0; arm < a.reports[f].arms.size(); ++arm) {
      const auto& x = a.reports[f].arms[arm];
      const auto& y = b.reports[f].arms[arm];
      CHECK(x.defined == y.defined);
      CHECK(std::memcmp(&x.q_hat, &y.q_hat, sizeof(double)) == 0);
      CHECK(std::memcmp(&x.p_hat, &y.p_hat, sizeof(double)) == 0);
      CHECK(std::memcmp(&x.v_hat, &y.v_hat, sizeof(double)) == 0);
      CHECK(std::memcmp(&x.ci.lo, &y.ci.lo, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("run_experiment matches serial replications regardless of workers") {
  const ExperimentConfig cfg = small_config();
  const auto parallel = run_experiment(cfg, 2);
  REQUIRE(static_cast<int>(parallel.size()) == cfg.replications);
  for (int r = 0; r < cfg.replications; ++r) {
    const auto serial = run_replication(cfg, r);
    CHECK(parallel[static_cast<std::size_t>(r)].rep == r);
    const auto& a = parallel[static_cast<std::size_t>(r)].reports;
    REQUIRE(a.size() == serial.reports.size());
    for (std::size_t f = 0; f < a.size(); ++f) {
      for (std::size_t arm = 0; arm < a[f].arms.size(); ++arm) {
        CHECK(a[f].arms[arm].q_hat == serial.reports[f].arms[arm].q_hat);
      }
    }
  }
}

TEST_CASE("aggregate: exact point estimates give zero bias and full coverage") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {EstimatorFamily::kDaipw};
  cfg.contrasts.clear();
  cfg.replications = 8;

  std::vector<ReplicationResult> results;
  for (int r = 0; r < cfg.replications; ++r) {
    ReplicationResult res;
    res.rep = r;
    EstimateReport report;
    report.family = EstimatorFamily::kDaipw;
    for (int a = 0; a < 2; ++a) {
      ArmEstimate est;
      est.defined = true;
      est.q_hat = cfg.outcomes.means[static_cast<std::size_t>(a)];
      est.p_hat = 1.0;
      est.v_hat = 0.04;
      est.ci = confidence_interval(est.q_hat, est.v_hat, cfg.ci_alpha);
      report.arms.push_back(est);
    }
    res.reports.push_back(report);
    results.push_back(res);
  }
  const auto metrics = aggregate(results, cfg);
  const auto& arm1 = metrics.at(EstimatorFamily::kDaipw, "arm_1");
  CHECK(arm1.bias == 0.0);
  CHECK(arm1.sd == 0.0);
  CHECK(arm1.coverage == 1.0);
  CHECK(arm1.undefined_rate == 0.0);
  CHECK(arm1.mean_se == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("aggregate: zero-width intervals off the truth never cover") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {EstimatorFamily::kDaipw};
  cfg.contrasts.clear();
  cfg.replications = 4;
  std::vector<ReplicationResult> results;
  for (int r = 0; r < 4; ++r) {
    ReplicationResult res;
    res.rep = r;
    EstimateReport report;
    report.family = EstimatorFamily::kDaipw;
    for (int a = 0; a < 2; ++a) {
      ArmEstimate est;
      est.defined = true;
      est.q_hat = cfg.outcomes.means[static_cast<std::size_t>(a)] + 0.25;
      est.v_hat = 0.0;
      est.ci = Interval{est.q_hat, est.q_hat};
      report.arms.push_back(est);
    }
    res.reports.push_back(report);
    results.push_back(res);
  }
  const auto metrics = aggregate(results, cfg);
  CHECK(metrics.at(EstimatorFamily::kDaipw, "arm_1").coverage == 0.0);
  CHECK(metrics.at(EstimatorFamily::kDaipw, "arm_2").coverage == 0.0);
}

TEST_CASE("aggregate: undefined estimates are excluded and counted") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {EstimatorFamily::kMean};
  cfg.contrasts.clear();
  cfg.replications = 10;
  std::vector<ReplicationResult> results;
  for (int r = 0; r < 10; ++r) {
    ReplicationResult res;
    res.rep = r;
    EstimateReport report;
    report.family = EstimatorFamily::kMean;
    for (int a = 0; a < 2; ++a) {
      ArmEstimate est;
      est.defined = (a == 0) || (r % 2 == 0);
      est.q_hat = cfg.outcomes.means[static_cast<std::size_t>(a)];
      est.v_hat = 0.01;
      est.ci = confidence_interval(est.q_hat, est.v_hat, cfg.ci_alpha);
      report.arms.push_back(est);
    }
    res.reports.push_back(report);
    results.push_back(res);
  }
  const auto metrics = aggregate(results, cfg);
  CHECK(metrics.at(EstimatorFamily::kMean, "arm_2").undefined_rate ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(metrics.at(EstimatorFamily::kMean, "arm_2").defined_count == 5);
}

TEST_CASE("aggregate: a cell with zero defined estimates is an error") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {EstimatorFamily::kMean};
  cfg.contrasts.clear();
  cfg.replications = 3;
  std::vector<ReplicationResult> results;
  for (int r = 0; r < 3; ++r) {
    ReplicationResult res;
    res.rep = r;
    EstimateReport report;
    report.family = EstimatorFamily::kMean;
    report.arms.resize(2);
    report.arms[0].defined = true;
    report.arms[0].q_hat = 1.0;
    report.arms[1].defined = false;
    res.reports.push_back(report);
    results.push_back(res);
  }
  CHECK_THROWS_AS(aggregate(results, cfg), DataError);
}

TEST_CASE("aggregate is invariant to replication order") {
  const ExperimentConfig cfg = small_config();
  auto results = run_experiment(cfg, 2);
  const auto metrics = aggregate(results, cfg);
  std::reverse(results.begin(), results.end());
  std::swap(results[1], results[5]);
  const auto shuffled = aggregate(results, cfg);
  for (std::size_t f = 0; f < metrics.families.size(); ++f) {
    for (std::size_t t = 0; t < metrics.families[f].targets.size(); ++t) {
      const auto& a = metrics.families[f].targets[t];
      const auto& b = shuffled.families[f].targets[t];
      CHECK(a.bias == b.bias);
      CHECK(a.sd == b.sd);
      CHECK(a.coverage == b.coverage);
      CHECK(a.ks_statistic == b.ks_statistic);
    }
  }
}

TEST_CASE("ks statistic: i.i.d. standard normal sample stays below 0.05") {
  SplitRng rng(777);
  std::vector<double> z(2000);
  for (auto& x : z) x = rng.next_normal();
  CHECK(ks_statistic_vs_normal(z) < 0.05);
  // a shifted sample is far from standard normal
  for (auto& x : z) x += 1.0;
  CHECK(ks_statistic_vs_normal(z) > 0.2);
}

TEST_CASE("histogram: 50 bins over [-4,4] count standardized errors") {
  ExperimentConfig cfg = small_config();
  cfg.estimators = {EstimatorFamily::kDaipw};
  cfg.contrasts.clear();
  cfg.replications = 5;
  std::vector<ReplicationResult> results;
  const double zs[] = {-5.0, -0.04, 0.0, 0.04, 3.99};
  for (int r = 0; r < 5; ++r) {
    ReplicationResult res;
    res.rep = r;
    EstimateReport report;
    report.family = EstimatorFamily::kDaipw;
    report.arms.resize(2);
    for (int a = 0; a < 2; ++a) {
      report.arms[static_cast<std::size_t>(a)].defined = true;
      report.arms[static_cast<std::size_t>(a)].q_hat =
          cfg.outcomes.means[static_cast<std::size_t>(a)] + zs[r];
      report.arms[static_cast<std::size_t>(a)].v_hat = 1.0;
    }
    res.reports.push_back(report);
    results.push_back(res);
  }
  const auto hist = standardized_error_histogram(results, cfg, EstimatorFamily::kDaipw,
                                                 "arm_1");
  REQUIRE(hist.counts.size() == 50);
  std::int64_t total = 0;
  for (auto c : hist.counts) total += c;
  CHECK(total == 4);  // -5.0 falls outside the [-4,4) window
  CHECK(hist.counts[24] == 1);  // -0.04 in [-0.16, 0)
  CHECK(hist.counts[25] == 2);  // 0.0 and 0.04 in [0, 0.16)
  CHECK(hist.counts[49] == 1);  // 3.99 in the last bin
}

TEST_CASE("resolve_worker_count respects DBI_THREADS") {
  setenv("DBI_THREADS", "1", 1);
  CHECK(resolve_worker_count(8) == 1);
  unsetenv("DBI_THREADS");
  CHECK(resolve_worker_count(1) == 1);
}

TEST_CASE("nh with the exact outcome model is unbiased under zero delays") {
  // Monte Carlo oracle: with mu_hat fixed at the true means and no delays,
  // the adaptive AIPW score has conditional mean mu(a) at every step.
  ExperimentConfig cfg = small_config();
  cfg.delays.arms[0].censor_prob = 0.0;
  cfg.horizon = 50;
  const int R = 2000;
  double sum = 0.0, sum_sq = 0.0;
  for (int rep = 0; rep < R; ++rep) {
    const Trajectory traj = simulate_replication_trajectory(cfg, rep);
    OutcomeModel mu(static_cast<std::size_t>(traj.horizon),
                    {cfg.outcomes.means[0], cfg.outcomes.means[1]});
    const double q = baseline_nh(traj, 0, mu);
    sum += q;
    sum_sq += q * q;
  }
  const double mean = sum / R;
  const double sd = std::sqrt((sum_sq / R - mean * mean) * R / (R - 1.0));
  CHECK(std::fabs(mean - cfg.outcomes.means[0]) < 3.0 * sd / std::sqrt(R));
}

TEST_CASE("nh0 adaptive mode centers near mu * P{D < inf} under censoring") {
  ExperimentConfig cfg = small_config();  // censor 0.5 on arm 1, mu(1) = 1
  cfg.horizon = 2000;
  const int R = 60;
  double sum = 0.0;
  for (int rep = 0; rep < R; ++rep) {
    const Trajectory traj = simulate_replication_trajectory(cfg, rep);
    sum += baseline_nh0(traj, 0, Nh0Mode::kAdaptive);
  }
  CHECK(sum / R == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("diagnostics summary: A5 ratio is exactly one for sqrt weights") {
  ExperimentConfig cfg = small_config();
  cfg.replications = 6;
  cfg.horizon = 80;
  const auto summary = run_diagnostics(cfg, 0.2);
  REQUIRE(summary.median_arms.size() == 2);
  CHECK(summary.median_arms[0].a5 == 1.0);
  CHECK(summary.median_arms[1].a5 == 1.0);
  CHECK(summary.median_arms[0].a1 > 0.0);
  CHECK(summary.median_arms[0].a1 <= 1.0);
}
