#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ordsel/numerics.hpp"
#include "ordsel/rng.hpp"

using namespace ordsel;

TEST_CASE("make_prob clamps floating-point dust and rejects real violations") {
    CHECK(double(numerics::make_prob(0.5)) == 0.5);
    CHECK(double(numerics::make_prob(-1e-13)) == 0.0);
    CHECK(double(numerics::make_prob(1.0 + 1e-13)) == 1.0);
    CHECK(double(numerics::make_prob(0.0)) == 0.0);
    CHECK(double(numerics::make_prob(1.0)) == 1.0);
    CHECK_THROWS_AS(numerics::make_prob(-1e-11), std::domain_error);
    CHECK_THROWS_AS(numerics::make_prob(1.0 + 1e-11), std::domain_error);
}

TEST_CASE("gaussian_cdf reference values") {
    CHECK(double(numerics::gaussian_cdf(0.0)) == Catch::Approx(0.5).margin(1e-15));
    // quantile of 0.975, oracle from adaptive integration of the density
    CHECK(double(numerics::gaussian_cdf(1.959964)) == Catch::Approx(0.975).margin(1e-6));
    // deep tail, oracle erfc(8/sqrt(2))/2 from a high-precision series
    CHECK(double(numerics::gaussian_cdf(-8.0)) ==
          Catch::Approx(6.2209605742717841e-16).margin(1e-17));
}

TEST_CASE("gaussian_cdf domain errors on non-finite input") {
    CHECK_THROWS_AS(numerics::gaussian_cdf(std::numeric_limits<double>::quiet_NaN()),
                    std::domain_error);
    CHECK_THROWS_AS(numerics::gaussian_cdf(std::numeric_limits<double>::infinity()),
                    std::domain_error);
    CHECK_THROWS_AS(numerics::gaussian_cdf(-std::numeric_limits<double>::infinity()),
                    std::domain_error);
}

TEST_CASE("gaussian_cdf complement identity within 1e-14") {
    rng::Engine eng(101);
    for (int i = 0; i < 1000; ++i) {
        const double x = eng.uniform(-10.0, 10.0);
        const double s = double(numerics::gaussian_cdf(x)) + double(numerics::gaussian_cdf(-x));
        REQUIRE(std::fabs(s - 1.0) <= 1e-14);
    }
}

TEST_CASE("gaussian_cdf nondecreasing on a sorted 1e4-point grid") {
    rng::Engine eng(102);
    std::vector<double> xs(10000);
    for (double& x : xs) x = eng.uniform(-12.0, 12.0);
    std::sort(xs.begin(), xs.end());
    double prev = 0.0;
    for (const double x : xs) {
        const double v = numerics::gaussian_cdf(x);
        REQUIRE(v >= prev);
        prev = v;
    }
}

TEST_CASE("chi2_cdf closed form for 2 degrees of freedom") {
    for (const double x : {0.5, 1.0, 4.0}) {
        const double expected = 1.0 - std::exp(-x / 2.0);
        REQUIRE(double(numerics::chi2_cdf(2, x)) == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("chi2_cdf squared-normal identity for 1 degree of freedom") {
    for (const double K : {1.0, 2.0, 9.0}) {
        const double expected = 2.0 * double(numerics::gaussian_cdf(std::sqrt(K))) - 1.0;
        REQUIRE(double(numerics::chi2_cdf(1, K)) == Catch::Approx(expected).margin(1e-10));
    }
    rng::Engine eng(103);
    for (int i = 0; i < 100; ++i) {
        const double K = eng.uniform(1e-6, 50.0);
        const double expected = 2.0 * double(numerics::gaussian_cdf(std::sqrt(K))) - 1.0;
        REQUIRE(double(numerics::chi2_cdf(1, K)) == Catch::Approx(expected).margin(1e-10));
    }
}

TEST_CASE("chi2_cdf(5, 4.2) matches a frozen 1e7-draw Monte-Carlo oracle") {
    // oracle mean 0.4790262 with standard error 1.58e-4 (sums of 5 squared normals)
    CHECK(double(numerics::chi2_cdf(5, 4.2)) ==
          Catch::Approx(0.4790262).margin(3.0 * 1.58e-4));
}

TEST_CASE("chi2_cdf returns exactly 0 at nonpositive arguments") {
    CHECK(double(numerics::chi2_cdf(3, 0.0)) == 0.0);
    CHECK(double(numerics::chi2_cdf(3, -5.0)) == 0.0);
    CHECK(double(numerics::chi2_cdf(1, -1e-300)) == 0.0);
}

TEST_CASE("chi2_cdf rejects zero degrees of freedom") {
    CHECK_THROWS_AS(numerics::chi2_cdf(0, 1.0), std::domain_error);
}

TEST_CASE("chi2_cdf nondecreasing on a sorted 1e4-point grid") {
    rng::Engine eng(104);
    for (const int k : {1, 2, 5, 20}) {
        std::vector<double> xs(10000);
        for (double& x : xs) x = eng.uniform(-5.0, 80.0);
        std::sort(xs.begin(), xs.end());
        double prev = 0.0;
        for (const double x : xs) {
            const double v = numerics::chi2_cdf(k, x);
            REQUIRE(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("erfc reference values and the Phi identity") {
    CHECK(double(numerics::erfc(0.0)) == 1.0);
    CHECK(double(numerics::erfc(1.0)) == Catch::Approx(0.15729920705028513).margin(1e-6));
    for (const double x : {0.3, 1.0, 2.5}) {
        const double viaPhi = 2.0 * (1.0 - double(numerics::gaussian_cdf(x * std::sqrt(2.0))));
        REQUIRE(double(numerics::erfc(x)) == Catch::Approx(viaPhi).margin(1e-12));
    }
    CHECK_THROWS_AS(numerics::erfc(-1e-12), std::domain_error);
}

namespace {

// 2 e^{-x^2} / (sqrt(pi) (x + sqrt(x^2 + 2))) <= erfc(x) <= e^{-x^2} / (sqrt(pi) x)
void check_erfc_bracket(double x) {
    const double v = numerics::erfc(x);
    const double sqrtPi = std::sqrt(std::acos(-1.0));
    const double lo = 2.0 * std::exp(-x * x) / (sqrtPi * (x + std::sqrt(x * x + 2.0)));
    const double hi = std::exp(-x * x) / (sqrtPi * x);
    REQUIRE(v >= lo);
    REQUIRE(v <= hi);
}

}  // namespace

TEST_CASE("erfc tail bracket at x = 3") { check_erfc_bracket(3.0); }

TEST_CASE("erfc tail bracket for 1000 random x in (0, 10]") {
    rng::Engine eng(105);
    for (int i = 0; i < 1000; ++i) check_erfc_bracket(eng.uniform(1e-8, 10.0) + 1e-12);
}
