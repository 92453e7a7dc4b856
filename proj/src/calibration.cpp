#include "ordsel/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace ordsel::calibration {

std::vector<double> default_k_grid() {
    std::vector<double> grid(81);
    for (int i = 0; i <= 80; ++i) grid[i] = static_cast<double>(20 + i) / 10.0;
    return grid;
}

void CalibrationConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("CalibrationConfig: alpha must be in (0,1)");
    if (!(gamma > 0.0)) throw std::invalid_argument("CalibrationConfig: gamma must be positive");
    if (kGrid.empty()) throw std::invalid_argument("CalibrationConfig: kGrid must be nonempty");
    if (!(kGrid.front() >= 2.0))
        throw std::invalid_argument("CalibrationConfig: kGrid must start at K >= 2");
    for (std::size_t i = 1; i < kGrid.size(); ++i)
        if (!(kGrid[i] > kGrid[i - 1]))
            throw std::invalid_argument("CalibrationConfig: kGrid must be strictly increasing");
    if (mcSamples < 1) throw std::invalid_argument("CalibrationConfig: mcSamples must be >= 1");
}

CalibrationResult calibrate(const linmodel::OrthoModel& model,
                            const estimation::PluginEstimate& plugin,
                            const CalibrationConfig& cfg) {
    cfg.validate();
    if (plugin.dHat > model.q)
        throw std::invalid_argument("calibrate: plugin dimension exceeds the collection size");
    if (!(plugin.sigma2Hat > 0.0))
        throw std::invalid_argument("calibrate: plugin sigma2Hat must be positive");
    if (plugin.dHat == model.q)
        throw SaturatedModelError(
            "plug-in dimension equals q: the bound is identically zero and the data cannot "
            "separate the saturated model from a smaller truth");

    // The fitted values at the plug-in dimension project onto u_k exactly as yCoef[k].
    fdrbounds::BoundInput input;
    input.signalCoef.assign(model.yCoef.begin(),
                            model.yCoef.begin() + static_cast<std::ptrdiff_t>(plugin.dHat));
    input.sigma2 = plugin.sigma2Hat;
    input.dStar = plugin.dHat;
    input.q = model.q;

    const fdrbounds::PrTable pr =
        fdrbounds::make_pr_table(input.dStar, input.q, cfg.kGrid, cfg.mcSamples, cfg.seed);

    CalibrationResult result;
    result.curve = fdrbounds::bound_curve(input, cfg.kGrid, pr);
    std::vector<double> gap(cfg.kGrid.size());
    for (std::size_t i = 0; i < cfg.kGrid.size(); ++i) {
        const double B = result.curve.upper[i];
        gap[i] = estimation::diff_pr(model, plugin.sigma2Hat, cfg.kGrid[i]);
        if (B > 0.0 && B < cfg.alpha) result.i1.push_back(i);
        if (gap[i] < cfg.gamma * plugin.sigma2Hat) result.i2.push_back(i);
    }
    if (result.i1.empty())
        throw CalibrationFailedError(
            "no grid point has a bound inside (0, alpha); raise alpha or extend the grid",
            result.curve);

    std::vector<std::size_t> both;
    std::set_intersection(result.i1.begin(), result.i1.end(), result.i2.begin(),
                          result.i2.end(), std::back_inserter(both));
    std::size_t chosen = 0;
    if (!both.empty()) {
        chosen = both.front();
        result.fallbackUsed = false;
    } else {
        chosen = result.i1.front();
        result.fallbackUsed = true;
    }
    result.kStar = cfg.kGrid[chosen];
    result.boundAtK = result.curve.upper[chosen];
    result.diffPrAtK = gap[chosen];
    return result;
}

namespace {
// Contiguous index runs become closed [Kmin, Kmax] intervals.
nlohmann::ordered_json intervals(const std::vector<std::size_t>& idx,
                                 const std::vector<double>& grid) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && idx[j + 1] == idx[j] + 1) ++j;
        out.push_back({grid[idx[i]], grid[idx[j]]});
        i = j + 1;
    }
    return out;
}
}  // namespace

nlohmann::ordered_json to_json(const CalibrationResult& result, const CalibrationConfig& cfg) {
    nlohmann::ordered_json j;
    j["kStar"] = result.kStar;
    j["fallbackUsed"] = result.fallbackUsed;
    j["boundAtK"] = result.boundAtK;
    j["diffPrAtK"] = result.diffPrAtK;
    j["i1"] = intervals(result.i1, cfg.kGrid);
    j["i2"] = intervals(result.i2, cfg.kGrid);
    j["alpha"] = cfg.alpha;
    j["gamma"] = cfg.gamma;
    j["provenance"] = {{"seed", cfg.seed},
                       {"mcSamples", cfg.mcSamples},
                       {"kGridMin", cfg.kGrid.front()},
                       {"kGridMax", cfg.kGrid.back()},
                       {"kGridSize", cfg.kGrid.size()}};
    return j;
}

}  // namespace ordsel::calibration
