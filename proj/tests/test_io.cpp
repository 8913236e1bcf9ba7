#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "dbi/cli.hpp"
#include "dbi/config.hpp"
#include "dbi/errors.hpp"
#include "dbi/logio.hpp"
#include "dbi/manifest.hpp"
#include "dbi/montecarlo.hpp"

using namespace dbi;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("dbi_test_" + std::to_string(::getpid()) + "_" +
                                   std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kMinimalConfig = R"({
  "outcomes": {"family": "normal", "means": [1.0, 0.5], "sds": [1.0, 1.0]},
  "delays": [{"censor_prob": 0.5, "kind": "zero"}, {"kind": "zero"}]
})";

int dispatch(std::initializer_list<const char*> args) {
  std::vector<const char*> argv = {"dbi"};
  argv.insert(argv.end(), args.begin(), args.end());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config: minimal file gets documented defaults") {
  const auto dir = temp_dir();
  write_text(dir / "cfg.json", kMinimalConfig);
  const ExperimentConfig cfg = parse_config_file((dir / "cfg.json").string());
  CHECK(cfg.arms() == 2);
  CHECK(cfg.horizon == 5000);
  CHECK(cfg.replications == 2000);
  CHECK(cfg.weights == WeightScheme::kSqrtPropensity);
  CHECK(cfg.policy.kind == PolicyKind::kEpsilonGreedy);
  CHECK(cfg.policy.decay_alpha == 0.3);
  CHECK(cfg.policy.clip_c == 1.0);
  CHECK(cfg.ci_alpha == 0.05);
  CHECK(cfg.nh0_mode == Nh0Mode::kFlat);
  CHECK(cfg.estimators.size() == 4);
  CHECK(cfg.seed == 1);
}

TEST_CASE("config: rejections name the offending field") {
  auto parse = [](const std::string& text) {
    return parse_config_json(nlohmann::json::parse(text));
  };
  // alpha at the boundary of [0,1)
  CHECK_THROWS_WITH_AS(
      parse(R"({"outcomes":{"family":"normal","means":[1,0.5],"sds":[1,1]},
                "delays":[{"kind":"zero"},{"kind":"zero"}],
                "policy":{"alpha":1.0}})"),
      "config: policy.alpha out of range [0,1)", ConfigError);
  // unknown top-level key
  CHECK_THROWS_WITH_AS(
      parse(R"({"outcomes":{"family":"normal","means":[1,0.5],"sds":[1,1]},
                "delays":[{"kind":"zero"},{"kind":"zero"}], "horizn": 10})"),
      "config: unknown key 'horizn'", ConfigError);
  // unknown estimator name
  CHECK_THROWS_WITH_AS(
      parse(R"({"outcomes":{"family":"normal","means":[1,0.5],"sds":[1,1]},
                "delays":[{"kind":"zero"},{"kind":"zero"}],
                "estimators":["daipw","ipw"]})"),
      "config: estimators: unknown estimator name 'ipw'", ConfigError);
  // nested unknown key
  CHECK_THROWS_AS(
      parse(R"({"outcomes":{"family":"normal","means":[1,0.5],"sds":[1,1],"mu":[1]},
                "delays":[{"kind":"zero"},{"kind":"zero"}]})"),
      ConfigError);
  // contrast of the wrong dimension
  CHECK_THROWS_AS(
      parse(R"({"outcomes":{"family":"normal","means":[1,0.5],"sds":[1,1]},
                "delays":[{"kind":"zero"},{"kind":"zero"}], "contrasts":[[1,-1,0]]})"),
      ConfigError);
}

TEST_CASE("config hash is stable across key order and whitespace") {
  const char* reordered = R"({
    "delays": [{"kind": "zero", "censor_prob": 0.5},   {"kind": "zero"}],
    "outcomes": {"means": [1.0, 0.5], "family": "normal", "sds": [1.0, 1.0]}
  })";
  const ExperimentConfig a = parse_config_json(nlohmann::json::parse(kMinimalConfig));
  const ExperimentConfig b = parse_config_json(nlohmann::json::parse(reordered));
  CHECK(fnv1a64_hex(config_to_json(a).dump()) == fnv1a64_hex(config_to_json(b).dump()));
  // and different configs hash differently
  ExperimentConfig c = a;
  c.seed = 99;
  CHECK(fnv1a64_hex(config_to_json(a).dump()) != fnv1a64_hex(config_to_json(c).dump()));
}

TEST_CASE("trajectory log round-trips exactly, including inf delays") {
  ExperimentConfig cfg;
  cfg.outcomes.means = {1.0, 0.5};
  cfg.outcomes.sds = {1.0, 1.0};
  cfg.delays.arms.resize(2);
  cfg.delays.arms[0].censor_prob = 0.5;
  cfg.delays.arms[1].kind = FiniteDelayKind::kRoundedPareto;
  cfg.horizon = 120;
  const Trajectory traj = simulate_replication_trajectory(cfg, 0);

  std::stringstream buffer;
  write_trajectory_csv(traj, buffer);
  const Trajectory parsed = read_trajectory_csv(buffer);

  REQUIRE(parsed.records.size() == traj.records.size());
  bool saw_censored = false;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& a = traj.records[i];
    const auto& b = parsed.records[i];
    CHECK(a.t == b.t);
    CHECK(a.action == b.action);
    CHECK(a.delay == b.delay);
    saw_censored = saw_censored || delay_is_censored(a.delay);
    CHECK(std::memcmp(&a.outcome, &b.outcome, sizeof(double)) == 0);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::memcmp(&a.propensities[k], &b.propensities[k], sizeof(double)) == 0);
      CHECK(std::memcmp(&a.weights[k], &b.weights[k], sizeof(double)) == 0);
    }
  }
  CHECK(saw_censored);  // the censored arm must exercise the `inf` token
}

TEST_CASE("evaluate_log reproduces in-process estimates bit-for-bit") {
  ExperimentConfig cfg;
  cfg.outcomes.means = {1.0, 0.5};
  cfg.outcomes.sds = {1.0, 1.0};
  cfg.delays.arms.resize(2);
  cfg.delays.arms[0].censor_prob = 0.5;
  cfg.horizon = 150;
  cfg.contrasts = {{1.0, -1.0}};
  const auto in_process = run_replication(cfg, 2);
  const Trajectory traj = simulate_replication_trajectory(cfg, 2);

  std::stringstream buffer;
  write_trajectory_csv(traj, buffer);
  EvaluateOptions options;
  options.contrasts = cfg.contrasts;
  const auto from_log = evaluate_log(read_trajectory_csv(buffer), options);

  REQUIRE(from_log.size() == in_process.reports.size());
  for (std::size_t f = 0; f < from_log.size(); ++f) {
    for (std::size_t a = 0; a < from_log[f].arms.size(); ++a) {
      const auto& x = in_process.reports[f].arms[a];
      const auto& y = from_log[f].arms[a];
      CHECK(x.defined == y.defined);
      CHECK(std::memcmp(&x.q_hat, &y.q_hat, sizeof(double)) == 0);
      CHECK(std::memcmp(&x.v_hat, &y.v_hat, sizeof(double)) == 0);
      CHECK(std::memcmp(&x.ci.lo, &y.ci.lo, sizeof(double)) == 0);
      CHECK(std::memcmp(&x.ci.hi, &y.ci.hi, sizeof(double)) == 0);
    }
    for (std::size_t c = 0; c < from_log[f].contrasts.size(); ++c) {
      const auto& x = in_process.reports[f].contrasts[c];
      const auto& y = from_log[f].contrasts[c];
      CHECK(x.defined == y.defined);
      CHECK(std::memcmp(&x.q_hat, &y.q_hat, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("hand-written two-row log evaluates to the worked value") {
  // Arm 1 played at t=1 with D=0, Y=2; arm 2 at t=2. With a zero outcome
  // model the DAIPW estimate for arm 1 is exactly 2.
  const std::string log =
      "t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"
      "1,1,0,2,0.5,0.5,0.70710678118654757,0.70710678118654757\n"
      "2,2,0,0,0.5,0.5,0.70710678118654757,0.70710678118654757\n";
  std::stringstream buffer(log);
  EvaluateOptions options;
  options.zero_outcome_model = true;
  const auto reports = evaluate_log(read_trajectory_csv(buffer), options);
  REQUIRE(reports[0].family == EstimatorFamily::kDaipw);
  REQUIRE(reports[0].arms[0].defined);
  CHECK(reports[0].arms[0].q_hat == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("malformed logs raise data errors with line numbers") {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return read_trajectory_csv(ss);
  };
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_WITH_AS(parse("t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"),
                       "log has no data rows", DataError);
  // bad delay token on line 2
  CHECK_THROWS_WITH_AS(parse("t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"
                             "1,1,oops,2,0.5,0.5,1,1\n"),
                       "log line 2: invalid delay 'oops'", DataError);
  // missing field
  CHECK_THROWS_AS(parse("t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"
                        "1,1,0,2,0.5,0.5,1\n"),
                  DataError);
  // played arm with zero propensity
  CHECK_THROWS_AS(parse("t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"
                        "1,1,0,2,0,1,1,1\n"),
                  DataError);
  // propensities off the simplex
  CHECK_THROWS_AS(parse("t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"
                        "1,1,0,2,0.6,0.6,1,1\n"),
                  DataError);
}

TEST_CASE("cli: simulate writes outputs and evaluate matches results.csv") {
  const auto dir = temp_dir();
  write_text(dir / "cfg.json",
             R"({"outcomes": {"family": "normal", "means": [1.0, 0.5], "sds": [1.0, 1.0]},
                 "delays": [{"censor_prob": 0.5, "kind": "zero"}, {"kind": "zero"}],
                 "horizon": 40, "replications": 6, "seed": 7,
                 "contrasts": [[1, -1]], "log_trajectories": 1})");
  const auto out = dir / "out";
  CHECK(dispatch({"simulate", (dir / "cfg.json").string().c_str(), "--out",
                  out.string().c_str()}) == 0);
  CHECK(fs::exists(out / "results.csv"));
  CHECK(fs::exists(out / "metrics.json"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "config.json"));
  CHECK(fs::exists(out / "trajectory_0.csv"));
  CHECK(fs::exists(out / "hist_daipw_arm_1.csv"));

  // evaluating the written trajectory log reproduces rep 0's rows
  EvaluateOptions options;
  options.contrasts = {{1.0, -1.0}};
  const auto reports =
      evaluate_log_file((out / "trajectory_0.csv").string(), options);
  std::stringstream expected;
  write_estimates_csv(expected, reports, 0, false);
  std::ifstream results(out / "results.csv");
  std::string header;
  std::getline(results, header);
  std::string rep0_rows;
  std::string line;
  const std::size_t rows_per_rep = 4 * 3;  // 4 families x (2 arms + 1 contrast)
  for (std::size_t i = 0; i < rows_per_rep && std::getline(results, line); ++i) {
    rep0_rows += line + "\n";
  }
  CHECK(rep0_rows == expected.str());

  // report renders both formats
  CHECK(dispatch({"report", out.string().c_str(), "--format", "csv"}) == 0);
  CHECK(dispatch({"report", out.string().c_str(), "--format", "json"}) == 0);
}

TEST_CASE("cli: exit codes") {
  const auto dir = temp_dir();
  // unknown subcommand -> usage error
  CHECK(dispatch({"frobnicate"}) == 64);
  // missing config -> configuration error
  CHECK(dispatch({"simulate", (dir / "missing.json").string().c_str(), "--out",
                  (dir / "o").string().c_str()}) == 2);
  // invalid config value -> configuration error
  write_text(dir / "bad.json",
             R"({"outcomes": {"family": "normal", "means": [1.0, 0.5], "sds": [1, 1]},
                 "delays": [{"kind": "zero"}, {"kind": "zero"}],
                 "policy": {"alpha": 1.0}})");
  CHECK(dispatch({"simulate", (dir / "bad.json").string().c_str(), "--out",
                  (dir / "o").string().c_str()}) == 2);
  // empty log -> data error
  write_text(dir / "empty.csv", "t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n");
  CHECK(dispatch({"evaluate", (dir / "empty.csv").string().c_str()}) == 3);
  // diagnose refuses logs (no delay law available)
  write_text(dir / "log.csv",
             "t,action,delay,outcome,pi_1,pi_2,h_1,h_2\n"
             "1,1,0,2,0.5,0.5,1,1\n");
  CHECK(dispatch({"diagnose", (dir / "log.csv").string().c_str()}) == 2);
  // report on a directory without metrics -> data error
  CHECK(dispatch({"report", dir.string().c_str()}) == 3);
}

TEST_CASE("cli: diagnose runs on a small config") {
  const auto dir = temp_dir();
  write_text(dir / "cfg.json",
             R"({"outcomes": {"family": "normal", "means": [1.0, 0.5], "sds": [1, 1]},
                 "delays": [{"censor_prob": 0.5, "kind": "zero"}, {"kind": "zero"}],
                 "horizon": 30, "replications": 4})");
  CHECK(dispatch({"diagnose", (dir / "cfg.json").string().c_str(), "--delta", "0.2"}) == 0);
}
