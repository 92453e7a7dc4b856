#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ordsel/linmodel.hpp"

namespace ordsel::simulation {

// Decreasing-coefficient rule: betaStar[dStar-1] = base, each earlier coefficient adds
// a Unif(incLow, incHigh) increment.
struct CoefRule {
    double base = 2.0;
    double incLow = 0.5;
    double incHigh = 1.5;
};

struct ScenarioSpec {
    std::string name = "custom";  // sparsity | complexity | high-dimension | noise | toy | custom
    std::size_t n = 50;
    std::size_t p = 50;
    std::size_t dStar = 10;
    double sigma2 = 1.0;
    CoefRule coefRule;
    std::uint64_t seed = 0;
    bool randomDesign = false;  // substitute an orthonormalized Gaussian design

    void validate() const;  // throws std::invalid_argument
};

ScenarioSpec toy_spec(std::uint64_t seed);

struct EmpiricalCurve {
    std::vector<double> kGrid;
    std::vector<double> fdrHat;
    std::vector<double> prHat;
    std::vector<double> fdrCiHalfWidth;  // 1.96 * sd / sqrt(replicates)
    std::vector<double> prCiHalfWidth;
    int replicates = 0;
};

// One replicate: betaStar is drawn once per spec.seed and shared by every replicate;
// the noise stream is derived from (seed, replicate) and consumed row by row, so the
// first rows of a larger-n dataset coincide with a smaller-n one at equal seeds.
// Default design: first p canonical columns (zero-padded when n < p).
std::pair<linmodel::Dataset, linmodel::GroundTruth> generate(const ScenarioSpec& spec,
                                                             std::uint64_t replicate);

// Independent validation response on the same design, stream (seed, replicate, "val").
std::vector<double> validation_response(const ScenarioSpec& spec,
                                        const linmodel::GroundTruth& truth,
                                        const linmodel::Matrix& X,
                                        std::uint64_t replicate);

// Per replicate: fit, select at every grid K, record fdp; score an independent
// validation response; average with CLT confidence half-widths. Replicates run in
// parallel into preallocated slots; reductions are fixed-order pairwise sums, so the
// curve is identical under any schedule.
EmpiricalCurve empirical_curves(const ScenarioSpec& spec, const std::vector<double>& kGrid,
                                int replicates);

// V-fold cross-validation over the nested collection: contiguous blocks after a seeded
// permutation of rows; for each dimension, average held-out squared error over folds
// whose training design has full rank at that dimension (rank-deficient comparisons are
// skipped, with one aggregated warning on stderr); smallest best dimension wins, refit
// on the full data. sigma2 is accepted for signature parity and does not enter the score.
linmodel::SelectionResult vfold_cv_select(const linmodel::Dataset& data, std::size_t folds,
                                          double sigma2, std::uint64_t seed = 0);

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json scenario_to_json(const ScenarioSpec& spec);

// CSV columns K, fdr, fdr_ci, pr, pr_ci; JSON carries the same plus provenance.
std::string to_csv(const EmpiricalCurve& curve);
nlohmann::ordered_json to_json(const EmpiricalCurve& curve, const ScenarioSpec& spec);

}  // namespace ordsel::simulation
