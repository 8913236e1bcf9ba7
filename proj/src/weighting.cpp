#include "dbi/weighting.hpp"

#include <algorithm>
#include <cmath>

#include "dbi/env.hpp"
#include "dbi/errors.hpp"
#include "dbi/special.hpp"

namespace dbi {

std::vector<double> compute_weights(const std::vector<double>& propensities,
                                    WeightScheme scheme) {
  std::vector<double> h(propensities.size(), 1.0);
  if (scheme == WeightScheme::kSqrtPropensity) {
    for (std::size_t a = 0; a < propensities.size(); ++a) {
      h[a] = std::sqrt(propensities[a]);
    }
  }
  return h;
}

namespace {

// h^2 / pi for one record; exact 1 under the sqrt-propensity scheme.
inline double weight_sq_over_propensity(double pi, double h, WeightScheme scheme) {
  if (scheme == WeightScheme::kSqrtPropensity) return 1.0;
  return h * h / pi;
}

// h^(2+delta) * pi^-(1+delta); simplified per scheme for accuracy.
inline double lyapunov_term(double pi, double h, double delta, WeightScheme scheme) {
  if (scheme == WeightScheme::kSqrtPropensity) return std::pow(pi, -0.5 * delta);
  if (scheme == WeightScheme::kConstantOne) return std::pow(pi, -(1.0 + delta));
  return std::pow(h, 2.0 + delta) * std::pow(pi, -(1.0 + delta));
}

}  // namespace

double a5_numerator(const Trajectory& traj, const DelaySpec& delays, int arm,
                    WeightScheme scheme) {
  const int T = traj.horizon;
  const auto& law = delays.arms[static_cast<std::size_t>(arm)];
  const std::vector<double> cdf = law.prob_delay_le_table(std::max(T - 1, 0));
  double s2 = 0.0;
  for (const auto& rec : traj.records) {
    const double pi = rec.propensities[static_cast<std::size_t>(arm)];
    const double h = rec.weights[static_cast<std::size_t>(arm)];
    const double f = cdf[static_cast<std::size_t>(T - rec.t)];
    s2 += weight_sq_over_propensity(pi, h, scheme) * f;
  }
  return s2;
}

double a5_reference_mean(std::span<const double> numerators) {
  if (numerators.empty()) return 0.0;
  bool all_equal = true;
  for (double x : numerators) {
    if (x != numerators.front()) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) return numerators.front();
  KahanSum sum;
  for (double x : numerators) sum.add(x);
  return sum.value() / static_cast<double>(numerators.size());
}

ConditionReport condition_diagnostics(const Trajectory& traj, const DelaySpec& delays,
                                      double delta, WeightScheme scheme,
                                      std::span<const double> a5_reference) {
  if (!(delta > 0.0)) throw ConfigError("condition_diagnostics: delta must be > 0");
  const int T = traj.horizon;
  const int K = traj.arms();
  if (delays.arm_count() != K) {
    throw ConfigError("condition_diagnostics: delay spec arm count mismatch");
  }
  if (!a5_reference.empty() && static_cast<int>(a5_reference.size()) != K) {
    throw ConfigError("condition_diagnostics: a5 reference must list one value per arm");
  }

  ConditionReport report;
  report.delta = delta;
  report.a5_is_ratio = !a5_reference.empty();
  report.arms.resize(static_cast<std::size_t>(K));

  for (int a = 0; a < K; ++a) {
    const auto& law = delays.arms[static_cast<std::size_t>(a)];
    const std::vector<double> cdf = law.prob_delay_le_table(std::max(T - 1, 0));
    const double p_finite = law.prob_finite();

    double sum_h = 0.0;
    double max_h = 0.0;
    double sum_h_tail = 0.0;  // sum_t h_t * P{T-t < D < inf}
    double s2 = 0.0;          // sum_t (h^2/pi) * P{D <= T-t}
    double s2d = 0.0;         // Lyapunov numerator
    for (const auto& rec : traj.records) {
      const double pi = rec.propensities[static_cast<std::size_t>(a)];
      const double h = rec.weights[static_cast<std::size_t>(a)];
      const double f = cdf[static_cast<std::size_t>(T - rec.t)];
      sum_h += h;
      max_h = std::max(max_h, h);
      sum_h_tail += h * (p_finite - f);
      s2 += weight_sq_over_propensity(pi, h, scheme) * f;
      s2d += lyapunov_term(pi, h, delta, scheme) * f;
    }

    ArmConditionStats& stats = report.arms[static_cast<std::size_t>(a)];
    stats.a1 = sum_h > 0.0 ? max_h / sum_h : 0.0;
    stats.a2 = s2 > 0.0 ? sum_h_tail / std::sqrt(s2) : 0.0;
    stats.a3 = sum_h > 0.0 ? s2 / (sum_h * sum_h) : 0.0;
    stats.a4 = s2 > 0.0 ? s2d / std::pow(s2, 0.5 * (2.0 + delta)) : 0.0;
    if (report.a5_is_ratio) {
      const double ref = a5_reference[static_cast<std::size_t>(a)];
      stats.a5 = ref != 0.0 ? s2 / ref : (s2 == 0.0 ? 1.0 : 0.0);
    } else {
      stats.a5 = s2;
    }
  }
  return report;
}

}  // namespace dbi
