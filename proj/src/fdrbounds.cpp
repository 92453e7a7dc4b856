#include "ordsel/fdrbounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ordsel/parallel.hpp"
#include "ordsel/rng.hpp"

namespace ordsel::fdrbounds {

namespace {

using numerics::chi2_cdf;
using numerics::gaussian_cdf;
using numerics::make_prob;
using numerics::ProbValue;

constexpr std::uint64_t kTagPStream = 0x5072;  // P-factor streams in the factorization
constexpr std::uint64_t kTagQStream = 0x5172;  // Q-factor streams

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

void check_input(const BoundInput& input) {
    if (input.q == 0) throw std::invalid_argument("BoundInput: q must be positive");
    if (input.dStar > input.q) throw std::invalid_argument("BoundInput: dStar exceeds q");
    if (input.signalCoef.size() != input.dStar)
        throw std::invalid_argument("BoundInput: signalCoef length must equal dStar");
    if (!(input.sigma2 > 0.0)) throw std::invalid_argument("BoundInput: sigma2 must be positive");
    for (double a : input.signalCoef)
        if (!std::isfinite(a)) throw std::invalid_argument("BoundInput: non-finite signalCoef");
}

void check_term_range(const BoundInput& input, std::size_t r) {
    if (r <= input.dStar || r > input.q)
        throw std::invalid_argument("term index r must satisfy dStar < r <= q");
}

// Strictly positive per-term floor: the sigma-free envelope under the lower f_r.
double floor_term(std::size_t r, double K) {
    const double rk = static_cast<double>(r) * K;
    const double denom = std::sqrt(std::numbers::pi) * (std::sqrt(rk) + std::sqrt(rk + 4.0));
    return 2.0 * std::numbers::sqrt2 / denom * std::exp(-rk / 2.0);
}

}  // namespace

const std::vector<double>& PrTable::row(std::size_t r) const {
    if (r <= dStar || r > q) throw std::out_of_range("PrTable::row: r outside {dStar+1..q}");
    return values[r - dStar - 1];
}

std::vector<ProbValue> pr_monte_carlo(std::size_t r, std::size_t q,
                                      const std::vector<double>& kGrid, int mcSamples,
                                      std::uint64_t seed) {
    if (r == 0) throw std::invalid_argument("pr_monte_carlo: r must be positive");
    if (r > q) throw std::invalid_argument("pr_monte_carlo: r exceeds q");
    if (mcSamples < 1) throw std::invalid_argument("pr_monte_carlo: mcSamples must be >= 1");

    std::vector<ProbValue> out(kGrid.size());
    if (r == q) {
        for (auto& v : out) v = ProbValue{1.0};
        return out;
    }

    // One draw set serves every K: the event holds iff max_l S_l / (l - r) < K,
    // so sorting the per-draw maxima turns each grid point into a rank lookup.
    rng::Engine eng(seed);
    const std::size_t tail = q - r;
    std::vector<double> maxRatio(static_cast<std::size_t>(mcSamples));
    for (auto& t : maxRatio) {
        double s = 0.0;
        double worst = 0.0;
        for (std::size_t d = 1; d <= tail; ++d) {
            const double z = eng.normal();
            s += z * z;
            const double ratio = s / static_cast<double>(d);
            if (ratio > worst) worst = ratio;
        }
        t = worst;
    }
    std::sort(maxRatio.begin(), maxRatio.end());
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
        const auto below = std::lower_bound(maxRatio.begin(), maxRatio.end(), kGrid[i]);
        const double frac = static_cast<double>(below - maxRatio.begin()) /
                            static_cast<double>(mcSamples);
        out[i] = make_prob(frac);
    }
    return out;
}

PrTable make_pr_table(std::size_t dStar, std::size_t q, std::vector<double> kGrid,
                      int mcSamples, std::uint64_t seed) {
    if (q == 0) throw std::invalid_argument("make_pr_table: q must be positive");
    if (dStar > q) throw std::invalid_argument("make_pr_table: dStar exceeds q");
    if (mcSamples < 1) throw std::invalid_argument("make_pr_table: mcSamples must be >= 1");
    for (std::size_t i = 1; i < kGrid.size(); ++i)
        if (!(kGrid[i] > kGrid[i - 1]))
            throw std::invalid_argument("make_pr_table: kGrid must be strictly increasing");

    PrTable table;
    table.dStar = dStar;
    table.q = q;
    table.kGrid = std::move(kGrid);
    table.mcSamples = mcSamples;
    table.seed = seed;
    table.values.assign(q - dStar, {});
    par::parallel_for(q - dStar, [&](std::size_t i) {
        const std::size_t r = dStar + 1 + i;
        const auto row = pr_monte_carlo(r, q, table.kGrid, mcSamples,
                                        seed ^ static_cast<std::uint64_t>(r));
        table.values[i].assign(row.begin(), row.end());
    });
    return table;
}

double lower_terms(const BoundInput& input, std::size_t r, double K) {
    check_input(input);
    check_term_range(input, r);
    if (!(K > 0.0)) throw std::invalid_argument("lower_terms: K must be positive");

    const double sigma = std::sqrt(input.sigma2);
    const double sqrtK = std::sqrt(K);
    const double phiSqrtK = gaussian_cdf(sqrtK);
    double f = 0.0;
    for (std::size_t l = 1; l <= r; ++l) {
        const double sl = std::sqrt(static_cast<double>(l) * K);
        double G = 0.0;
        double H = 0.0;
        if (l <= input.dStar) {
            const double shift = input.signalCoef[l - 1] / sigma;
            const double pairAtL = gaussian_cdf(sl - shift) + gaussian_cdf(sl + shift);
            G = clamp01(2.0 - pairAtL);
            if (l >= 2) {
                const double pairAt1 =
                    gaussian_cdf(sqrtK - shift) + gaussian_cdf(sqrtK + shift);
                H = clamp01(pairAtL - pairAt1);
            }
        } else {
            const double phiSl = gaussian_cdf(sl);
            G = clamp01(2.0 * (1.0 - phiSl));
            H = clamp01(2.0 * (phiSl - phiSqrtK));
        }
        f = (l == 1) ? G : G + H * f;
    }
    return clamp01(f);
}

double upper_terms(const BoundInput& input, std::size_t r, double K) {
    check_input(input);
    check_term_range(input, r);
    if (!(K > 0.0)) throw std::invalid_argument("upper_terms: K must be positive");

    double maxCdf = 0.0;
    for (std::size_t l = 1; l <= r - input.dStar; ++l) {
        maxCdf = std::max(maxCdf,
                          static_cast<double>(chi2_cdf(static_cast<int>(l),
                                                       static_cast<double>(l) * K)));
    }
    // Signal shift for l > r - dStar: sum of the last l - (r - dStar) squared
    // signal coefficients over sigma^2, accumulated from the tail.
    double shift = 0.0;
    for (std::size_t l = r - input.dStar + 1; l <= r; ++l) {
        const std::size_t k = r - l + 1;  // runs dStar, dStar-1, .., 1
        shift += input.signalCoef[k - 1] * input.signalCoef[k - 1] / input.sigma2;
        const double arg = static_cast<double>(l) * K / 2.0 - shift;
        maxCdf = std::max(maxCdf, static_cast<double>(chi2_cdf(static_cast<int>(l), arg)));
    }
    return clamp01(1.0 - maxCdf);
}

BoundCurve bound_curve(const BoundInput& input, const std::vector<double>& kGrid,
                       const PrTable& pr) {
    check_input(input);
    if (pr.dStar != input.dStar || pr.q != input.q)
        throw std::invalid_argument("bound_curve: PrTable was built for different (dStar, q)");
    if (pr.kGrid != kGrid)
        throw std::invalid_argument("bound_curve: PrTable grid does not match kGrid");

    BoundCurve curve;
    curve.kGrid = kGrid;
    curve.lower.assign(kGrid.size(), 0.0);
    curve.upper.assign(kGrid.size(), 0.0);
    curve.floor.assign(kGrid.size(), 0.0);
    if (input.dStar == input.q) return curve;

    for (std::size_t i = 0; i < kGrid.size(); ++i) {
        const double K = kGrid[i];
        for (std::size_t r = input.dStar + 1; r <= input.q; ++r) {
            const double w = static_cast<double>(r - input.dStar) / static_cast<double>(r);
            const double p = pr.values[r - input.dStar - 1][i];
            if (p == 0.0) continue;
            curve.lower[i] += w * p * lower_terms(input, r, K);
            curve.upper[i] += w * p * upper_terms(input, r, K);
            curve.floor[i] += w * p * floor_term(r, K);
        }
    }
    return curve;
}

ProbValue qr_monte_carlo(const BoundInput& input, std::size_t r, double K, int mcSamples,
                         std::uint64_t seed) {
    check_input(input);
    check_term_range(input, r);
    if (!(K > 0.0)) throw std::invalid_argument("qr_monte_carlo: K must be positive");
    if (mcSamples < 1) throw std::invalid_argument("qr_monte_carlo: mcSamples must be >= 1");

    const double sigma = std::sqrt(input.sigma2);
    rng::Engine eng(seed);
    std::vector<double> g(r);
    long hits = 0;
    for (int s = 0; s < mcSamples; ++s) {
        for (std::size_t k = 0; k < r; ++k) {
            const double meanK = k < input.dStar ? input.signalCoef[k] : 0.0;
            g[k] = meanK + sigma * eng.normal();
        }
        // All r constraints hold iff the worst suffix sum still clears its threshold:
        // min_l sum_{k=l+1}^r g_k^2 / (sigma^2 (r - l)) > K.
        double suffix = 0.0;
        bool ok = true;
        for (std::size_t back = 1; back <= r; ++back) {
            suffix += g[r - back] * g[r - back];
            if (!(suffix > K * input.sigma2 * static_cast<double>(back))) {
                ok = false;
                break;
            }
        }
        if (ok) ++hits;
    }
    return make_prob(static_cast<double>(hits) / static_cast<double>(mcSamples));
}

FactorizedTerms fdr_factorized_terms(const BoundInput& input, double K, int mcSamples,
                                     std::uint64_t seed, double prScale) {
    check_input(input);
    if (input.dStar >= input.q)
        throw std::invalid_argument("fdr_factorized: requires dStar < q");
    if (!(K > 0.0)) throw std::invalid_argument("fdr_factorized: K must be positive");
    if (mcSamples < 1) throw std::invalid_argument("fdr_factorized: mcSamples must be >= 1");

    const std::size_t terms = input.q - input.dStar;
    FactorizedTerms out;
    out.pHat.assign(terms, 0.0);
    out.qHat.assign(terms, 0.0);
    const std::vector<double> grid{K};
    par::parallel_for(terms, [&](std::size_t i) {
        const std::size_t r = input.dStar + 1 + i;
        const double praw =
            pr_monte_carlo(r, input.q, grid, mcSamples, rng::derive(seed, kTagPStream, r))[0];
        out.pHat[i] = praw * prScale;
        out.qHat[i] =
            qr_monte_carlo(input, r, K, mcSamples, rng::derive(seed, kTagQStream, r));
    });

    const double mc = static_cast<double>(mcSamples);
    double var = 0.0;
    for (std::size_t i = 0; i < terms; ++i) {
        const std::size_t r = input.dStar + 1 + i;
        const double w = static_cast<double>(r - input.dStar) / static_cast<double>(r);
        const double p = out.pHat[i];
        const double qv = out.qHat[i];
        out.value += w * p * qv;
        // Independent streams: Var(pq) = q^2 Vp + p^2 Vq + Vp Vq per term.
        const double vp = clamp01(p) * (1.0 - clamp01(p)) / mc * prScale * prScale;
        const double vq = qv * (1.0 - qv) / mc;
        var += w * w * (qv * qv * vp + p * p * vq + vp * vq);
    }
    out.mcStdErr = std::sqrt(var);
    return out;
}

double fdr_factorized(const BoundInput& input, double K, int mcSamples, std::uint64_t seed) {
    return fdr_factorized_terms(input, K, mcSamples, seed).value;
}

std::string to_csv(const BoundCurve& curve) {
    std::ostringstream out;
    out << "K,b,B,floor\n";
    for (std::size_t i = 0; i < curve.kGrid.size(); ++i) {
        out << g17(curve.kGrid[i]) << "," << g17(curve.lower[i]) << "," << g17(curve.upper[i])
            << "," << g17(curve.floor[i]) << "\n";
    }
    return out.str();
}

nlohmann::ordered_json to_json(const BoundCurve& curve, const BoundInput& input,
                               int mcSamples, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["K"] = curve.kGrid;
    j["b"] = curve.lower;
    j["B"] = curve.upper;
    j["floor"] = curve.floor;
    j["provenance"] = {{"seed", seed},
                       {"mcSamples", mcSamples},
                       {"dStar", input.dStar},
                       {"sigma2", input.sigma2},
                       {"q", input.q}};
    return j;
}

}  // namespace ordsel::fdrbounds
