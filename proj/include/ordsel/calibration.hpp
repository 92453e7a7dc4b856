#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ordsel/estimation.hpp"
#include "ordsel/fdrbounds.hpp"
#include "ordsel/linmodel.hpp"

namespace ordsel::calibration {

// K grid step 0.1 on [2, 10].
std::vector<double> default_k_grid();

struct CalibrationConfig {
    double alpha = 0.05;            // FDR-bound threshold
    double gamma = 0.1;             // prediction-gap threshold multiplier
    std::vector<double> kGrid;      // nonempty, strictly increasing, kGrid[0] >= 2
    int mcSamples = fdrbounds::kDefaultMcSamples;
    std::uint64_t seed = 0;

    CalibrationConfig() : kGrid(default_k_grid()) {}
    void validate() const;  // throws std::invalid_argument
};

struct CalibrationResult {
    double kStar = 0.0;
    std::vector<std::size_t> i1;  // grid indices with 0 < B < alpha
    std::vector<std::size_t> i2;  // grid indices with diff-PR < gamma * sigma2Hat
    bool fallbackUsed = false;    // true: i1 cap i2 empty, kStar = min over i1
    double boundAtK = 0.0;
    double diffPrAtK = 0.0;
    fdrbounds::BoundCurve curve;  // the evaluated bound curve, kept for reporting
};

// No grid point satisfies 0 < B < alpha; carries the full curve so the caller
// can pick larger thresholds.
class CalibrationFailedError : public std::runtime_error {
public:
    CalibrationFailedError(const std::string& what, fdrbounds::BoundCurve c)
        : std::runtime_error(what), curve(std::move(c)) {}
    fdrbounds::BoundCurve curve;
};

// dHat = q: the bound is identically zero and the data cannot separate the
// saturated model from a smaller truth.
class SaturatedModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data-driven choice of K: builds the plug-in BoundInput, evaluates B on the grid,
// intersects the bound and prediction-gap index sets, returns the smallest grid K in
// the intersection, or the smallest in i1 with fallbackUsed = true.
CalibrationResult calibrate(const linmodel::OrthoModel& model,
                            const estimation::PluginEstimate& plugin,
                            const CalibrationConfig& cfg);

// JSON with kStar, i1/i2 as closed K-intervals, thresholds, fallback flag, provenance.
nlohmann::ordered_json to_json(const CalibrationResult& result,
                               const CalibrationConfig& cfg);

}  // namespace ordsel::calibration
