#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordsel/fdrbounds.hpp"
#include "ordsel/linmodel.hpp"
#include "ordsel/numerics.hpp"
#include "ordsel/parallel.hpp"
#include "ordsel/rng.hpp"
#include "ordsel/simulation.hpp"

using namespace ordsel;

namespace {

fdrbounds::BoundInput toy_input(std::uint64_t seed) {
    const auto spec = simulation::toy_spec(seed);
    auto [data, truth] = simulation::generate(spec, 0);
    fdrbounds::BoundInput in;
    in.dStar = truth.dStar;
    in.q = std::min(spec.n, spec.p);
    in.sigma2 = truth.sigma2;
    // canonical design: <X beta*, u_k> = beta*_k
    in.signalCoef.assign(truth.betaStar.begin(), truth.betaStar.begin() + truth.dStar);
    return in;
}

fdrbounds::BoundInput random_input(rng::Engine& eng, std::size_t maxQ = 12) {
    fdrbounds::BoundInput in;
    in.q = 2 + static_cast<std::size_t>(eng.uniform01() * double(maxQ - 2));
    in.dStar = static_cast<std::size_t>(eng.uniform01() * double(in.q));
    if (in.dStar >= in.q) in.dStar = in.q - 1;
    in.sigma2 = eng.uniform(0.3, 2.5);
    double coef = eng.uniform(2.0, 6.0);
    for (std::size_t k = 0; k < in.dStar; ++k) {
        in.signalCoef.push_back(coef);
        coef = std::max(0.3, coef - eng.uniform(0.1, 0.8));
    }
    return in;
}

}  // namespace

TEST_CASE("pr_monte_carlo: r = q is exactly 1 on the whole grid") {
    const std::vector<double> grid = {0.5, 2.0, 7.5};
    const auto vals = fdrbounds::pr_monte_carlo(6, 6, grid, 100, 1);
    REQUIRE(vals.size() == grid.size());
    for (const auto& v : vals) REQUIRE(double(v) == 1.0);
}

TEST_CASE("pr_monte_carlo: single-constraint case matches the closed form") {
    const std::vector<double> grid = {1.0, 2.0, 5.0};
    const int mc = 20000;
    const auto vals = fdrbounds::pr_monte_carlo(9, 10, grid, mc, 21);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double p = 2.0 * double(numerics::gaussian_cdf(std::sqrt(grid[i]))) - 1.0;
        const double tol = 3.0 * std::sqrt(p * (1.0 - p) / mc);
        REQUIRE(double(vals[i]) == Catch::Approx(p).margin(tol));
    }
}

TEST_CASE("pr_monte_carlo: huge K makes every constraint hold") {
    const auto vals = fdrbounds::pr_monte_carlo(3, 10, {1e6}, 5000, 22);
    REQUIRE(double(vals[0]) >= 1.0 - 1e-3);
}

TEST_CASE("pr_monte_carlo: common random numbers give monotone estimates in K") {
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.25 + 0.25 * i);
    const auto vals = fdrbounds::pr_monte_carlo(4, 12, grid, 3000, 23);
    for (std::size_t i = 1; i < vals.size(); ++i) REQUIRE(double(vals[i]) >= double(vals[i - 1]));
}

TEST_CASE("pr_monte_carlo: domain errors and determinism") {
    CHECK_THROWS_AS(fdrbounds::pr_monte_carlo(0, 5, {1.0}, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(fdrbounds::pr_monte_carlo(6, 5, {1.0}, 10, 0), std::invalid_argument);
    const auto a = fdrbounds::pr_monte_carlo(2, 8, {1.0, 3.0}, 4000, 77);
    const auto b = fdrbounds::pr_monte_carlo(2, 8, {1.0, 3.0}, 4000, 77);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(double(a[i]) == double(b[i]));
}

TEST_CASE("make_pr_table: shape, last row, bounds checks, reproducibility") {
    const std::vector<double> grid = {2.0, 4.0, 8.0};
    const auto tab = fdrbounds::make_pr_table(3, 8, grid, 2000, 5);
    REQUIRE(tab.values.size() == 5);
    for (const double v : tab.row(8)) REQUIRE(v == 1.0);
    CHECK_THROWS_AS(tab.row(3), std::out_of_range);
    CHECK_THROWS_AS(tab.row(9), std::out_of_range);

    const auto tab2 = fdrbounds::make_pr_table(3, 8, grid, 2000, 5);
    for (std::size_t r = 4; r <= 8; ++r)
        for (std::size_t i = 0; i < grid.size(); ++i) REQUIRE(tab.row(r)[i] == tab2.row(r)[i]);
}

TEST_CASE("make_pr_table rows are identical under any thread cap") {
    const std::vector<double> grid = {2.0, 5.0};
    par::set_thread_cap(1);
    const auto seq = fdrbounds::make_pr_table(0, 10, grid, 2000, 9);
    par::set_thread_cap(4);
    const auto parTab = fdrbounds::make_pr_table(0, 10, grid, 2000, 9);
    par::set_thread_cap(0);
    for (std::size_t r = 1; r <= 10; ++r)
        for (std::size_t i = 0; i < grid.size(); ++i) REQUIRE(seq.row(r)[i] == parTab.row(r)[i]);
}

TEST_CASE("make_pr_table rejects a non-increasing grid") {
    CHECK_THROWS_AS(fdrbounds::make_pr_table(0, 5, {2.0, 2.0}, 100, 0), std::invalid_argument);
    CHECK_THROWS_AS(fdrbounds::make_pr_table(0, 5, {3.0, 2.0}, 100, 0), std::invalid_argument);
}

TEST_CASE("lower_terms: no-signal single step equals the Gaussian tail") {
    fdrbounds::BoundInput in;
    in.dStar = 0;
    in.q = 10;
    in.sigma2 = 1.0;
    const double K = 4.0;
    const double expected = double(numerics::erfc(std::sqrt(2.0)));  // 2(1 - Phi(2))
    REQUIRE(fdrbounds::lower_terms(in, 1, K) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("lower_terms: two-step unrolled recursion matches hand evaluation") {
    fdrbounds::BoundInput in;
    in.dStar = 0;
    in.q = 10;
    in.sigma2 = 1.0;
    const double K = 2.0;
    const double phi1 = numerics::gaussian_cdf(std::sqrt(K));
    const double phi2 = numerics::gaussian_cdf(std::sqrt(2.0 * K));
    const double g1 = 2.0 * (1.0 - phi1);
    const double g2 = 2.0 * (1.0 - phi2);
    const double h2 = 2.0 * (phi2 - phi1);
    REQUIRE(fdrbounds::lower_terms(in, 2, K) == Catch::Approx(g2 + h2 * g1).margin(1e-12));
}

TEST_CASE("lower_terms dominates its leading term and stays in [0, 1]") {
    rng::Engine eng(301);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = random_input(eng);
        const double K = eng.uniform(0.2, 12.0);
        for (std::size_t r = in.dStar + 1; r <= in.q; ++r) {
            const double f = fdrbounds::lower_terms(in, r, K);
            const double g =
                2.0 * (1.0 - double(numerics::gaussian_cdf(std::sqrt(double(r) * K))));
            REQUIRE(f >= g - 1e-12);
            REQUIRE(f >= 0.0);
            REQUIRE(f <= 1.0);
        }
    }
}

TEST_CASE("upper_terms: no-signal reduction at r = 1, K = 4") {
    fdrbounds::BoundInput in;
    in.dStar = 0;
    in.q = 10;
    in.sigma2 = 1.0;
    const double expected = 2.0 * (1.0 - double(numerics::gaussian_cdf(2.0)));
    REQUIRE(fdrbounds::upper_terms(in, 1, 4.0) == Catch::Approx(expected).margin(1e-10));
}

TEST_CASE("upper_terms: vanishing penalty sends the term to 1") {
    rng::Engine eng(302);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_input(eng);
        for (std::size_t r = in.dStar + 1; r <= in.q; ++r)
            REQUIRE(fdrbounds::upper_terms(in, r, 1e-12) >= 1.0 - 1e-6);
    }
}

TEST_CASE("upper_terms decreases in K on the toy input at r = 11") {
    const auto in = toy_input(1);
    double prev = 2.0;
    for (int k = 2; k <= 10; ++k) {
        const double v = fdrbounds::upper_terms(in, 11, double(k));
        REQUIRE(v <= prev + 1e-15);
        prev = v;
    }
}

TEST_CASE("upper_terms dominates lower_terms pointwise") {
    rng::Engine eng(303);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = random_input(eng);
        const double K = eng.uniform(0.2, 12.0);
        for (std::size_t r = in.dStar + 1; r <= in.q; ++r)
            REQUIRE(fdrbounds::upper_terms(in, r, K) >=
                    fdrbounds::lower_terms(in, r, K) - 1e-12);
    }
}

TEST_CASE("bound_curve: saturated input yields identically zero curves") {
    fdrbounds::BoundInput in;
    in.dStar = 6;
    in.q = 6;
    in.sigma2 = 1.0;
    in.signalCoef.assign(6, 2.0);
    const std::vector<double> grid = {2.0, 5.0, 9.0};
    const auto tab = fdrbounds::make_pr_table(6, 6, grid, 100, 0);
    const auto cur = fdrbounds::bound_curve(in, grid, tab);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(cur.lower[i] == 0.0);
        REQUIRE(cur.upper[i] == 0.0);
        REQUIRE(cur.floor[i] == 0.0);
    }
}

TEST_CASE("bound_curve sandwich floor <= lower <= upper on random inputs") {
    rng::Engine eng(304);
    const std::vector<double> grid = {0.5, 1.0, 2.0, 4.0, 8.0};
    for (int trial = 0; trial < 25; ++trial) {
        const auto in = random_input(eng);
        const auto tab =
            fdrbounds::make_pr_table(in.dStar, in.q, grid, 1000, 1000 + trial);
        const auto cur = fdrbounds::bound_curve(in, grid, tab);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            REQUIRE(cur.floor[i] >= 0.0);
            REQUIRE(cur.floor[i] <= cur.lower[i] + 1e-12);
            REQUIRE(cur.lower[i] <= cur.upper[i] + 1e-12);
            REQUIRE(cur.floor[i] > 0.0);  // dStar < q keeps the r = q term alive
        }
    }
}

TEST_CASE("bound_curve on the toy input: coarse decay and vanishing tail") {
    const auto in = toy_input(1);
    const std::vector<double> grid = {2.0, 10.0, 50.0};
    const auto tab = fdrbounds::make_pr_table(in.dStar, in.q, grid, 3000, 41);
    const auto cur = fdrbounds::bound_curve(in, grid, tab);
    REQUIRE(cur.upper[1] < cur.upper[0]);            // B(10) < B(2)
    REQUIRE(cur.upper[2] < 1e-6 * cur.upper[0]);     // B(50) < 1e-6 B(2)
}

TEST_CASE("bound_curve rejects a PrTable built on a different grid") {
    const auto in = toy_input(1);
    const auto tab = fdrbounds::make_pr_table(in.dStar, in.q, {2.0, 3.0}, 200, 0);
    CHECK_THROWS_AS(fdrbounds::bound_curve(in, {2.0, 4.0}, tab), std::invalid_argument);
    fdrbounds::BoundInput other = in;
    other.dStar = in.dStar + 1;
    other.signalCoef.push_back(0.5);
    CHECK_THROWS_AS(fdrbounds::bound_curve(other, {2.0, 3.0}, tab), std::invalid_argument);
}

TEST_CASE("qr_monte_carlo: vanishing threshold saturates the constraints") {
    rng::Engine eng(305);
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_input(eng);
        const std::size_t r = in.dStar + 1;
        REQUIRE(double(fdrbounds::qr_monte_carlo(in, r, 1e-12, 2000, trial)) >= 1.0 - 1e-3);
    }
}

TEST_CASE("qr_monte_carlo: no-signal single constraint matches the closed form") {
    fdrbounds::BoundInput in;
    in.dStar = 0;
    in.q = 5;
    in.sigma2 = 1.7;
    const int mc = 20000;
    for (const double K : {1.0, 3.0}) {
        const double p = 2.0 * (1.0 - double(numerics::gaussian_cdf(std::sqrt(K))));
        const double se = std::sqrt(p * (1.0 - p) / mc);
        REQUIRE(double(fdrbounds::qr_monte_carlo(in, 1, K, mc, 55)) ==
                Catch::Approx(p).margin(3.0 * se + 1e-4));
    }
}

TEST_CASE("qr_monte_carlo sits inside the recursion sandwich for small inputs") {
    rng::Engine eng(306);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = random_input(eng, 6);
        const double K = eng.uniform(0.5, 6.0);
        const int mc = 4000;
        for (std::size_t r = in.dStar + 1; r <= std::min<std::size_t>(in.q, 5); ++r) {
            const double fl = fdrbounds::lower_terms(in, r, K);
            const double fu = fdrbounds::upper_terms(in, r, K);
            const double qh = fdrbounds::qr_monte_carlo(in, r, K, mc, 900 + trial);
            const double se = std::sqrt(std::max(qh * (1.0 - qh), 1e-6) / mc);
            REQUIRE(qh >= fl - 3.0 * se - 1e-3);
            REQUIRE(qh <= fu + 3.0 * se + 1e-3);
        }
    }
}

TEST_CASE("fdr_factorized: dStar = q - 1 reduces to the single r = q term") {
    fdrbounds::BoundInput in;
    in.dStar = 4;
    in.q = 5;
    in.sigma2 = 1.0;
    in.signalCoef = {5.0, 4.0, 3.0, 2.0};
    const double K = 2.0;
    const auto terms = fdrbounds::fdr_factorized_terms(in, K, 20000, 7);
    REQUIRE(terms.pHat.size() == 1);
    REQUIRE(terms.qHat.size() == 1);
    REQUIRE(terms.pHat[0] == 1.0);  // P_q is the empty intersection
    REQUIRE(terms.value == Catch::Approx(terms.qHat[0] / 5.0).margin(1e-15));
    REQUIRE(fdrbounds::fdr_factorized(in, K, 20000, 7) == terms.value);
}

TEST_CASE("fdr_factorized agrees with end-to-end selection on the q=8 instance") {
    fdrbounds::BoundInput in;
    in.dStar = 3;
    in.q = 8;
    in.sigma2 = 1.0;
    in.signalCoef = {3.0, 2.0, 1.0};
    const double K = 2.0;
    const auto est = fdrbounds::fdr_factorized_terms(in, K, 20000, 31);

    simulation::ScenarioSpec sp;
    sp.name = "custom";
    sp.n = 8;
    sp.p = 8;
    sp.dStar = 3;
    sp.sigma2 = 1.0;
    sp.coefRule = {1.0, 1.0, 1.0};  // deterministic beta* = (3, 2, 1)
    sp.seed = 32;
    const int reps = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        auto [data, truth] = simulation::generate(sp, std::uint64_t(rep));
        const auto m = linmodel::orthonormalize(data);
        const auto sel = linmodel::select_model(m, K, 1.0);
        const double f = linmodel::fdp(sel, truth);
        sum += f;
        sumsq += f * f;
    }
    const double mean = sum / reps;
    const double var = (sumsq - reps * mean * mean) / (reps - 1);
    const double se = std::sqrt(var / reps);
    const double comb = std::sqrt(se * se + est.mcStdErr * est.mcStdErr);
    REQUIRE(std::fabs(est.value - mean) <= 3.0 * comb);
}

TEST_CASE("fdr_factorized lands between the assembled bounds") {
    rng::Engine eng(307);
    const std::vector<double> grid = {2.0};
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_input(eng, 8);
        const auto tab = fdrbounds::make_pr_table(in.dStar, in.q, grid, 8000, 600 + trial);
        const auto cur = fdrbounds::bound_curve(in, grid, tab);
        const auto est = fdrbounds::fdr_factorized_terms(in, 2.0, 8000, 700 + trial);
        const double slack = 3.0 * est.mcStdErr + 0.02;
        REQUIRE(est.value >= cur.lower[0] - slack);
        REQUIRE(est.value <= cur.upper[0] + slack);
    }
}

TEST_CASE("orthogonal-case agreement: design-derived and direct inputs coincide") {
    rng::Engine eng(308);
    const std::size_t n = 20, p = 8, dStar = 4;
    // orthonormalize a random design, use U itself as the design matrix
    linmodel::Dataset raw;
    raw.n = n;
    raw.p = p;
    raw.Y.assign(n, 0.0);
    raw.X = linmodel::Matrix(n, p);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i) raw.X.at(i, j) = eng.normal();
    const auto basis = linmodel::orthonormalize(raw);

    std::vector<double> betaStar = {4.0, 3.0, 2.5, 2.0};
    linmodel::Dataset ortho;
    ortho.n = n;
    ortho.p = p;
    ortho.X = basis.U;
    ortho.Y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dStar; ++k) ortho.Y[i] += basis.U.at(i, k) * betaStar[k];
    const auto model = linmodel::orthonormalize(ortho);

    fdrbounds::BoundInput fromDesign;
    fromDesign.dStar = dStar;
    fromDesign.q = p;
    fromDesign.sigma2 = 1.0;
    fromDesign.signalCoef.assign(model.yCoef.begin(), model.yCoef.begin() + dStar);

    fdrbounds::BoundInput direct;
    direct.dStar = dStar;
    direct.q = p;
    direct.sigma2 = 1.0;
    direct.signalCoef = betaStar;

    const std::vector<double> grid = {2.0, 4.0, 8.0};
    const auto tab = fdrbounds::make_pr_table(dStar, p, grid, 2000, 3);
    const auto a = fdrbounds::bound_curve(fromDesign, grid, tab);
    const auto b = fdrbounds::bound_curve(direct, grid, tab);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(a.lower[i] == Catch::Approx(b.lower[i]).margin(1e-10));
        REQUIRE(a.upper[i] == Catch::Approx(b.upper[i]).margin(1e-10));
        REQUIRE(a.floor[i] == Catch::Approx(b.floor[i]).margin(1e-10));
    }
}

TEST_CASE("bound curve serialization carries values and provenance") {
    const auto in = toy_input(1);
    const std::vector<double> grid = {2.0, 3.0};
    const auto tab = fdrbounds::make_pr_table(in.dStar, in.q, grid, 500, 12);
    const auto cur = fdrbounds::bound_curve(in, grid, tab);

    const std::string csv = fdrbounds::to_csv(cur);
    REQUIRE(csv.rfind("K,b,B,floor\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);

    const auto j = fdrbounds::to_json(cur, in, 500, 12);
    REQUIRE(j.contains("K"));
    REQUIRE(j.contains("b"));
    REQUIRE(j.contains("B"));
    REQUIRE(j.contains("floor"));
    REQUIRE(j["provenance"]["mcSamples"] == 500);
    REQUIRE(j["provenance"]["seed"] == 12);
    REQUIRE(j["provenance"]["dStar"] == in.dStar);
    REQUIRE(j["provenance"]["q"] == in.q);
}
