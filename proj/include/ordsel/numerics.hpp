#pragma once

#include <stdexcept>

namespace ordsel::numerics {

// Probability in [0, 1]. Raw values may carry floating-point dust of at most 1e-12
// outside the unit interval; anything worse is a logic error upstream.
struct ProbValue {
    double value = 0.0;
    operator double() const { return value; }
};

// Checks raw is within [-1e-12, 1 + 1e-12], then clamps to [0, 1].
ProbValue make_prob(double raw);

// Standard normal CDF. Absolute error <= 1e-12; gaussian_cdf(x) + gaussian_cdf(-x) = 1
// to within 1e-14. Non-finite input throws std::domain_error.
ProbValue gaussian_cdf(double x);

// Chi-squared CDF with k >= 1 degrees of freedom: the regularized lower incomplete
// gamma P(k/2, x/2). Returns exactly 0 for x <= 0 (argument shifts downstream can be
// negative). k = 0 throws std::domain_error.
ProbValue chi2_cdf(int k, double x);

// Complementary error function on x >= 0; negative input throws std::domain_error.
ProbValue erfc(double x);

}  // namespace ordsel::numerics
