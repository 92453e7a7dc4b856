#pragma once

#include <stdexcept>
#include <vector>

#include "ordsel/linmodel.hpp"

namespace ordsel::estimation {

// Data-driven stand-ins for (sigma2, beta*, dStar).
struct PluginEstimate {
    double sigma2Hat = 0.0;
    std::vector<double> betaHat4;  // length p, support in the first dHat coordinates
    std::size_t dHat = 0;
};

// The variance fit found no noise-dominated decrease in the window.
class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SigmaEstimator { slope, fallback };

// Slope-heuristic variance estimate: ordinary least-squares affine fit of
// rss_profile[j]/n against j over j in {ceil((1-windowFraction) q) .. q};
// returns -n * slope, floored at 1e-12. Requires q >= 4 and a window of at
// least 3 dimensions. A fitted slope >= 0 throws DegenerateFitError.
double slope_sigma2(const linmodel::OrthoModel& model, double windowFraction = 0.5);

// Unbiased residual-based alternative rss_profile[q] / (n - q); requires n > q + 10.
double fallback_sigma2(const linmodel::OrthoModel& model);

// sigma2Hat from the chosen estimator, then betaHat4 and dHat from the
// penalized selection at K = pluginK (4 unless reconfigured).
PluginEstimate plugin_estimate(const linmodel::OrthoModel& model,
                               const linmodel::Dataset& data,
                               double windowFraction = 0.5,
                               double pluginK = 4.0,
                               SigmaEstimator estimator = SigmaEstimator::slope);

// Estimated squared prediction gap (1/n) |X betaHat(2) - X betaHat(K)|^2, computed
// as (1/n) sum of yCoef[k]^2 over the dimensions separating the two selections.
// Exactly 0 at K = 2.
double diff_pr(const linmodel::OrthoModel& model, double sigma2Hat, double K);

}  // namespace ordsel::estimation
