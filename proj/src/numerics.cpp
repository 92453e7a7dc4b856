#include "ordsel/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace ordsel::numerics {

namespace {
constexpr double kProbSlack = 1e-12;
constexpr double kGammaEps = 1e-15;
constexpr int kGammaMaxIter = 1000;
constexpr double kFpMin = 1e-300;

// Series for the regularized lower incomplete gamma P(a, z), valid for z < a + 1.
double gamma_p_series(double a, double z) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kGammaMaxIter; ++i) {
        ap += 1.0;
        del *= z / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kGammaEps) {
            return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
        }
    }
    throw std::runtime_error("incomplete gamma series did not converge");
}

// Lentz continued fraction for the regularized upper incomplete gamma Q(a, z),
// valid for z >= a + 1.
double gamma_q_cf(double a, double z) {
    double b = z + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kGammaEps) {
            return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
        }
    }
    throw std::runtime_error("incomplete gamma continued fraction did not converge");
}
}  // namespace

ProbValue make_prob(double raw) {
    if (!(raw >= -kProbSlack && raw <= 1.0 + kProbSlack)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", raw);
        throw std::domain_error(std::string("probability out of range: ") + buf);
    }
    if (raw < 0.0) raw = 0.0;
    if (raw > 1.0) raw = 1.0;
    return ProbValue{raw};
}

ProbValue gaussian_cdf(double x) {
    if (!std::isfinite(x)) throw std::domain_error("gaussian_cdf: non-finite argument");
    return make_prob(0.5 * std::erfc(-x / std::sqrt(2.0)));
}

ProbValue chi2_cdf(int k, double x) {
    if (k <= 0) throw std::domain_error("chi2_cdf: degrees of freedom must be positive");
    if (x <= 0.0) return ProbValue{0.0};
    if (!std::isfinite(x)) throw std::domain_error("chi2_cdf: non-finite argument");
    const double a = 0.5 * k;
    const double z = 0.5 * x;
    if (z < a + 1.0) return make_prob(gamma_p_series(a, z));
    return make_prob(1.0 - gamma_q_cf(a, z));
}

ProbValue erfc(double x) {
    if (!(x >= 0.0)) throw std::domain_error("erfc: argument must be >= 0");
    return make_prob(std::erfc(x));
}

}  // namespace ordsel::numerics
