#pragma once

#include <cstddef>
#include <vector>

namespace dbi {

// Standard normal CDF, evaluated through erfc. |error| < 1e-14.
double normal_cdf(double x) noexcept;

// Inverse standard normal CDF for p in (0,1). Rational initial guess
// (Acklam's approximation, |error| < 1.15e-9) refined by one Halley step,
// which brings the result to near machine precision.
double inverse_normal_cdf(double p);

// Upper alpha/2 quantile z such that P(Z > z) = alpha/2; the half-width
// multiplier of a two-sided (1 - alpha) normal interval.
double z_upper_halfalpha(double alpha);

double log_beta(double a, double b);

double beta_pdf(double x, double a, double b);

// Regularized incomplete beta I_x(a, b) via the modified Lentz continued
// fraction. a, b > 0; clamps x outside [0, 1] to the boundary values.
double regularized_incomplete_beta(double x, double a, double b);

// P(X1 >= X0) for independent X1 ~ Beta(a1, b1), X0 ~ Beta(a0, b0).
// Fixed 256-node Gauss-Legendre quadrature, symmetrized so that swapping
// the argument pairs maps q to exactly 1 - q and identical pairs give
// exactly 0.5.
double beta_prob_ge(double a1, double b1, double a0, double b0);

struct GaussLegendre {
  std::vector<double> nodes;    // ascending, inside (0, 1)
  std::vector<double> weights;  // sum to 1
};

// Nodes and weights of the n-point Gauss-Legendre rule mapped to (0, 1).
GaussLegendre gauss_legendre_unit(std::size_t n);

// Kahan-Babuska compensated accumulator.
class KahanSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace dbi
