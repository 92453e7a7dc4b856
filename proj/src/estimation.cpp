#include "ordsel/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace ordsel::estimation {

double slope_sigma2(const linmodel::OrthoModel& model, double windowFraction) {
    if (!(windowFraction > 0.0 && windowFraction < 1.0))
        throw std::invalid_argument("slope_sigma2: windowFraction must be in (0,1)");
    if (model.q < 4) throw std::invalid_argument("slope_sigma2: needs q >= 4");

    const auto qd = static_cast<double>(model.q);
    const auto start =
        static_cast<std::size_t>(std::ceil((1.0 - windowFraction) * qd));
    const std::size_t count = model.q - start + 1;
    if (count < 3) throw std::invalid_argument("slope_sigma2: window has fewer than 3 dimensions");

    // OLS slope of rssProf[j]/n against j over the window.
    const double n = static_cast<double>(model.n);
    double sumX = 0.0, sumY = 0.0;
    for (std::size_t j = start; j <= model.q; ++j) {
        sumX += static_cast<double>(j);
        sumY += model.rssProf[j] / n;
    }
    const double meanX = sumX / static_cast<double>(count);
    const double meanY = sumY / static_cast<double>(count);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = start; j <= model.q; ++j) {
        const double dx = static_cast<double>(j) - meanX;
        sxx += dx * dx;
        sxy += dx * (model.rssProf[j] / n - meanY);
    }
    const double slope = sxy / sxx;
    if (slope >= 0.0)
        throw DegenerateFitError(
            "variance fit slope is nonnegative: the window shows no noise-dominated decrease");
    return std::max(-n * slope, 1e-12);
}

double fallback_sigma2(const linmodel::OrthoModel& model) {
    if (model.n <= model.q + 10)
        throw std::invalid_argument("fallback_sigma2: requires n > q + 10");
    return std::max(model.rssProf[model.q] / static_cast<double>(model.n - model.q), 1e-12);
}

PluginEstimate plugin_estimate(const linmodel::OrthoModel& model,
                               const linmodel::Dataset& data, double windowFraction,
                               double pluginK, SigmaEstimator estimator) {
    if (data.n != model.n || data.p != model.p)
        throw std::invalid_argument("plugin_estimate: dataset does not match the model");
    PluginEstimate est;
    est.sigma2Hat = estimator == SigmaEstimator::slope ? slope_sigma2(model, windowFraction)
                                                       : fallback_sigma2(model);
    const linmodel::SelectionResult sel = linmodel::select_model(model, pluginK, est.sigma2Hat);
    est.betaHat4 = sel.betaHat;
    est.dHat = sel.dim;
    return est;
}

double diff_pr(const linmodel::OrthoModel& model, double sigma2Hat, double K) {
    if (!(K > 0.0)) throw std::invalid_argument("diff_pr: K must be positive");
    if (!(sigma2Hat > 0.0)) throw std::invalid_argument("diff_pr: sigma2Hat must be positive");
    const std::size_t d2 = linmodel::select_model(model, 2.0, sigma2Hat).dim;
    const std::size_t dK = linmodel::select_model(model, K, sigma2Hat).dim;
    const std::size_t lo = std::min(d2, dK);
    const std::size_t hi = std::max(d2, dK);
    // Nested spans: the fitted values differ exactly by the in-between projections.
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += model.yCoef[k] * model.yCoef[k];
    return s / static_cast<double>(model.n);
}

}  // namespace ordsel::estimation
