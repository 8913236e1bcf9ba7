#include "dbi/logio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dbi/errors.hpp"
#include "dbi/weighting.hpp"

namespace dbi {

std::string format_real17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const int K = traj.arms();
  out << "t,action,delay,outcome";
  for (int a = 1; a <= K; ++a) out << ",pi_" << a;
  for (int a = 1; a <= K; ++a) out << ",h_" << a;
  out << "\n";
  for (const auto& rec : traj.records) {
    out << rec.t << ',' << rec.action + 1 << ',';
    if (delay_is_censored(rec.delay)) {
      out << "inf";
    } else {
      out << rec.delay;
    }
    out << ',' << format_real17(rec.outcome);
    for (double p : rec.propensities) out << ',' << format_real17(p);
    for (double h : rec.weights) out << ',' << format_real17(h);
    out << "\n";
  }
}

void write_trajectory_csv_file(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_trajectory_csv(traj, out);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_real(const std::string& s, int line_no, const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw DataError("log line " + std::to_string(line_no) + ": invalid " + what + " '" +
                    s + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& s, int line_no, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw DataError("log line " + std::to_string(line_no) + ": invalid " + what + " '" +
                    s + "'");
  }
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno == ERANGE) {
    throw DataError("log line " + std::to_string(line_no) + ": " + what + " out of range");
  }
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("log is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (header.size() < 6 || header[0] != "t" || header[1] != "action" ||
      header[2] != "delay" || header[3] != "outcome") {
    throw DataError("log line 1: expected header t,action,delay,outcome,pi_1..,h_1..");
  }
  const std::size_t K = (header.size() - 4) / 2;
  if (K < 1 || header.size() != 4 + 2 * K) {
    throw DataError("log line 1: propensity and weight column counts must match");
  }
  for (std::size_t a = 0; a < K; ++a) {
    if (header[4 + a] != "pi_" + std::to_string(a + 1) ||
        header[4 + K + a] != "h_" + std::to_string(a + 1)) {
      throw DataError("log line 1: expected columns pi_1..pi_K then h_1..h_K");
    }
  }

  Trajectory traj;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4 + 2 * K) {
      throw DataError("log line " + std::to_string(line_no) + ": expected " +
                      std::to_string(4 + 2 * K) + " fields, got " +
                      std::to_string(fields.size()));
    }
    TrajectoryRecord rec;
    rec.t = static_cast<int>(parse_count(fields[0], line_no, "time index"));
    const auto action = parse_count(fields[1], line_no, "action");
    if (action < 1 || action > K) {
      throw DataError("log line " + std::to_string(line_no) + ": action out of range");
    }
    rec.action = static_cast<Arm>(action - 1);
    if (fields[2] == "inf") {
      rec.delay = kDelayNever;
    } else {
      rec.delay = parse_count(fields[2], line_no, "delay");
    }
    rec.outcome = parse_real(fields[3], line_no, "outcome");
    rec.propensities.reserve(K);
    rec.weights.reserve(K);
    for (std::size_t a = 0; a < K; ++a) {
      rec.propensities.push_back(parse_real(fields[4 + a], line_no, "propensity"));
    }
    for (std::size_t a = 0; a < K; ++a) {
      rec.weights.push_back(parse_real(fields[4 + K + a], line_no, "weight"));
    }
    traj.records.push_back(std::move(rec));
  }
  if (traj.records.empty()) throw DataError("log has no data rows");
  traj.horizon = static_cast<int>(traj.records.size());
  traj.validate();
  return traj;
}

Trajectory read_trajectory_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_trajectory_csv(in);
}

std::vector<EstimateReport> evaluate_log(Trajectory traj, const EvaluateOptions& options) {
  if (options.reweight) {
    for (auto& rec : traj.records) {
      rec.weights = compute_weights(rec.propensities, *options.reweight);
    }
  }
  for (const auto& w : options.contrasts) {
    if (static_cast<int>(w.size()) != traj.arms()) {
      throw ConfigError("evaluate: contrast vectors must have one weight per arm");
    }
  }
  if (options.zero_outcome_model) {
    const OutcomeModel mu = constant_outcome_model(traj, 0.0);
    std::vector<EstimateReport> reports;
    for (EstimatorFamily family : options.families) {
      EstimateReport report;
      report.family = family;
      for (Arm a = 0; a < traj.arms(); ++a) {
        report.arms.push_back(
            estimate_arm(traj, a, family, mu, options.nh0_mode, options.ci_alpha));
      }
      for (const auto& w : options.contrasts) {
        report.contrasts.push_back(contrast(report.arms, w, options.ci_alpha));
      }
      reports.push_back(std::move(report));
    }
    return reports;
  }
  return evaluate_trajectory(traj, options.families, options.contrasts, options.ci_alpha,
                             options.nh0_mode, options.model);
}

std::vector<EstimateReport> evaluate_log_file(const std::string& path,
                                              const EvaluateOptions& options) {
  return evaluate_log(read_trajectory_csv_file(path), options);
}

void write_estimates_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
                         int rep, bool header) {
  if (header) out << "rep,estimator,target,qhat,phat,vhat,ci_lo,ci_hi,defined\n";
  for (const auto& report : reports) {
    const char* name = estimator_name(report.family);
    for (std::size_t a = 0; a < report.arms.size(); ++a) {
      const ArmEstimate& est = report.arms[a];
      out << rep << ',' << name << ",arm_" << a + 1 << ',';
      if (est.defined) out << format_real17(est.q_hat);
      out << ',' << format_real17(est.p_hat) << ',';
      if (est.defined) {
        out << format_real17(est.v_hat) << ',' << format_real17(est.ci.lo) << ','
            << format_real17(est.ci.hi);
      } else {
        out << ",,";
      }
      out << ',' << (est.defined ? 1 : 0) << "\n";
    }
    for (std::size_t c = 0; c < report.contrasts.size(); ++c) {
      const ContrastEstimate& est = report.contrasts[c];
      out << rep << ',' << name << ",contrast_" << c + 1 << ',';
      if (est.defined) {
        out << format_real17(est.q_hat) << ",," << format_real17(est.v_hat) << ','
            << format_real17(est.ci.lo) << ',' << format_real17(est.ci.hi);
      } else {
        out << ",,,,";
      }
      out << ',' << (est.defined ? 1 : 0) << "\n";
    }
  }
}

void write_results_csv(std::ostream& out, const std::vector<ReplicationResult>& results,
                       const ExperimentConfig& config) {
  (void)config;
  bool header = true;
  for (const auto& result : results) {
    write_estimates_csv(out, result.reports, result.rep, header);
    header = false;
  }
}

void write_metrics_json(std::ostream& out, const AggregateMetrics& metrics,
                        const ExperimentConfig& config) {
  nlohmann::json j;
  j["replications"] = metrics.replications;
  j["horizon"] = config.horizon;
  j["ci_alpha"] = config.ci_alpha;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& family : metrics.families) {
    for (const auto& t : family.targets) {
      nlohmann::json row;
      row["estimator"] = estimator_name(family.family);
      row["target"] = t.target;
      row["true_value"] = t.true_value;
      row["bias"] = t.bias;
      row["sd"] = t.sd;
      row["mean_se"] = t.mean_se;
      row["coverage"] = t.coverage;
      row["ks_statistic"] = t.ks_statistic;
      row["undefined_rate"] = t.undefined_rate;
      row["defined_count"] = t.defined_count;
      if (t.mean_p_hat) row["mean_p_hat"] = *t.mean_p_hat;
      rows.push_back(row);
    }
  }
  j["metrics"] = rows;
  out << j.dump(2) << "\n";
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_lo,bin_hi,count\n";
  const double width = (hist.hi - hist.lo) / static_cast<double>(hist.counts.size());
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out << format_real17(hist.lo + width * static_cast<double>(b)) << ','
        << format_real17(hist.lo + width * static_cast<double>(b + 1)) << ','
        << hist.counts[b] << "\n";
  }
}

}  // namespace dbi
