#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordsel/numerics.hpp"

namespace ordsel::fdrbounds {

inline constexpr int kDefaultMcSamples = 5000;

// Everything the explicit FDR bounds need: signalCoef[k] = <X beta*, u_k> for the
// dStar active coordinates, the noise variance, and the collection size q.
// dStar = q is allowed at the type level; operations that need dStar < r <= q
// enforce their own preconditions.
struct BoundInput {
    std::vector<double> signalCoef;  // length dStar
    double sigma2 = 1.0;
    std::size_t dStar = 0;
    std::size_t q = 0;
};

// Monte-Carlo table of the data-free factors P_r(K), one row per r in {dStar+1..q},
// sharing one K grid. Row r = q is exactly 1 (intersection over an empty index set).
// Rows are reproducible from (mcSamples, seed): row r uses sub-seed seed ^ r.
struct PrTable {
    std::size_t dStar = 0;
    std::size_t q = 0;
    std::vector<double> kGrid;
    std::vector<std::vector<double>> values;  // values[r - dStar - 1][gridIdx]
    int mcSamples = kDefaultMcSamples;
    std::uint64_t seed = 0;

    const std::vector<double>& row(std::size_t r) const;
};

// Assembled bound curves on a K grid: 0 <= floor <= lower <= upper pointwise
// (up to Monte-Carlo error on the shared P_r factor).
struct BoundCurve {
    std::vector<double> kGrid;
    std::vector<double> lower;  // b
    std::vector<double> upper;  // B
    std::vector<double> floor;
};

// P_r(K): fraction of mcSamples draws of (Z_{r+1}..Z_q) iid standard normal with
// sum_{k=r+1}^{l} Z_k^2 < K(l - r) for every l in {r+1..q}. One draw set serves the
// entire grid (common random numbers), so each estimate is nondecreasing in K.
// r = q returns exactly 1 for every K. r > q or r = 0 throws std::invalid_argument.
std::vector<numerics::ProbValue> pr_monte_carlo(std::size_t r, std::size_t q,
                                                const std::vector<double>& kGrid,
                                                int mcSamples, std::uint64_t seed);

PrTable make_pr_table(std::size_t dStar, std::size_t q, std::vector<double> kGrid,
                      int mcSamples, std::uint64_t seed);

// Recursive lower-bound term f_r (underline): f_1 = G_1, f_l = G_l + H_l f_{l-1},
// with the signal forms of G/H for l <= dStar and the noise forms beyond. G, H and
// the result are clamped to [0, 1]. Requires dStar < r <= q.
double lower_terms(const BoundInput& input, std::size_t r, double K);

// Chi-squared upper-bound term f_r (overline): 1 minus the largest of
// F_{chi2(l)}(lK) over l in {1..r-dStar} and F_{chi2(l)}(lK/2 - shift) over
// l in {r-dStar+1..r}; negative CDF arguments contribute 0. Requires dStar < r <= q.
double upper_terms(const BoundInput& input, std::size_t r, double K);

// Assembles lower/upper/floor over the grid from one shared P_r table.
// dStar = q yields identically-zero curves. Grid mismatch throws std::invalid_argument.
BoundCurve bound_curve(const BoundInput& input, const std::vector<double>& kGrid,
                       const PrTable& pr);

// Q_r(K): Monte-Carlo estimate drawing <Y, u_k> ~ N(signalCoef[k], sigma2) for
// k <= dStar and N(0, sigma2) beyond, checking all r partial-sum constraints.
numerics::ProbValue qr_monte_carlo(const BoundInput& input, std::size_t r, double K,
                                   int mcSamples, std::uint64_t seed);

// Exact-FDR factorization sum_{r} ((r - dStar)/r) P_r(K) Q_r(K) with fresh
// independent Monte-Carlo streams for the P and Q factors.
double fdr_factorized(const BoundInput& input, double K, int mcSamples,
                      std::uint64_t seed);

// Factorized sum with per-term estimates exposed, a delta-method standard error,
// and an optional scale on the P factors (verification fault-injection hook).
struct FactorizedTerms {
    std::vector<double> pHat;  // indexed r - dStar - 1
    std::vector<double> qHat;
    double value = 0.0;
    double mcStdErr = 0.0;
};
FactorizedTerms fdr_factorized_terms(const BoundInput& input, double K, int mcSamples,
                                     std::uint64_t seed, double prScale = 1.0);

// CSV columns K, b, B, floor; JSON carries the same plus provenance.
std::string to_csv(const BoundCurve& curve);
nlohmann::ordered_json to_json(const BoundCurve& curve, const BoundInput& input,
                               int mcSamples, std::uint64_t seed);

}  // namespace ordsel::fdrbounds
