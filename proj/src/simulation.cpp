#include "ordsel/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ordsel/parallel.hpp"
#include "ordsel/rng.hpp"

namespace ordsel::simulation {

namespace {

constexpr std::uint64_t kTagBeta = 0xb374;    // coefficient draw, once per spec seed
constexpr std::uint64_t kTagDesign = 0xde51;  // random-design draw, once per spec seed
constexpr std::uint64_t kTagNoise = 0xe501;   // training noise, per replicate
constexpr std::uint64_t kTagVal = 0x7a1d;     // validation noise, per replicate
constexpr std::uint64_t kTagFold = 0xf01d;    // fold permutation

const char* const kScenarioNames[] = {"sparsity", "complexity", "high-dimension",
                                      "noise",    "toy",        "custom"};

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> draw_beta_star(const ScenarioSpec& spec) {
    std::vector<double> beta(spec.p, 0.0);
    if (spec.dStar == 0) return beta;
    rng::Engine eng(rng::derive(spec.seed, kTagBeta));
    beta[spec.dStar - 1] = spec.coefRule.base;
    for (std::size_t j = spec.dStar - 1; j-- > 0;)
        beta[j] = beta[j + 1] + eng.uniform(spec.coefRule.incLow, spec.coefRule.incHigh);
    return beta;
}

linmodel::Matrix make_design(const ScenarioSpec& spec) {
    const std::size_t q = std::min(spec.n, spec.p);
    linmodel::Matrix X(spec.n, spec.p);
    if (!spec.randomDesign) {
        // Canonical columns; columns beyond q stay zero and never enter selection.
        for (std::size_t j = 0; j < q; ++j) X.at(j, j) = 1.0;
        return X;
    }
    rng::Engine eng(rng::derive(spec.seed, kTagDesign));
    for (std::size_t j = 0; j < spec.p; ++j)
        for (std::size_t i = 0; i < spec.n; ++i) X.at(i, j) = eng.normal();
    // Orthonormalize the first q columns in place; later columns (p > n only) keep
    // their raw draws and sit inside the span, unused by selection.
    linmodel::Dataset probe;
    probe.n = spec.n;
    probe.p = q;
    probe.Y.assign(spec.n, 0.0);
    probe.X = linmodel::Matrix(spec.n, q);
    std::copy(X.data.begin(), X.data.begin() + static_cast<std::ptrdiff_t>(spec.n * q),
              probe.X.data.begin());
    const linmodel::OrthoModel ortho = linmodel::orthonormalize(probe);
    std::copy(ortho.U.data.begin(), ortho.U.data.end(), X.data.begin());
    return X;
}

std::vector<double> mean_response(const linmodel::Matrix& X, const std::vector<double>& beta,
                                  std::size_t dStar) {
    std::vector<double> out(X.n, 0.0);
    for (std::size_t j = 0; j < dStar; ++j) {
        const double* xj = X.col(j);
        for (std::size_t i = 0; i < X.n; ++i) out[i] += beta[j] * xj[i];
    }
    return out;
}

}  // namespace

void ScenarioSpec::validate() const {
    const bool known = std::any_of(std::begin(kScenarioNames), std::end(kScenarioNames),
                                   [&](const char* s) { return name == s; });
    if (!known) throw std::invalid_argument("ScenarioSpec: unknown scenario name '" + name + "'");
    if (n == 0 || p == 0) throw std::invalid_argument("ScenarioSpec: n and p must be positive");
    if (dStar > std::min(n, p))
        throw std::invalid_argument("ScenarioSpec: dStar exceeds min(n, p)");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("ScenarioSpec: sigma2 must be positive");
    if (!(coefRule.base > 0.0))
        throw std::invalid_argument("ScenarioSpec: coefficient base must be positive");
    if (!(coefRule.incLow >= 0.0 && coefRule.incHigh >= coefRule.incLow))
        throw std::invalid_argument("ScenarioSpec: need 0 <= incLow <= incHigh");
}

ScenarioSpec toy_spec(std::uint64_t seed) {
    ScenarioSpec spec;
    spec.name = "toy";
    spec.seed = seed;
    return spec;
}

std::pair<linmodel::Dataset, linmodel::GroundTruth> generate(const ScenarioSpec& spec,
                                                             std::uint64_t replicate) {
    spec.validate();

    linmodel::GroundTruth truth;
    truth.betaStar = draw_beta_star(spec);
    truth.sigma2 = spec.sigma2;
    truth.dStar = spec.dStar;

    linmodel::Dataset data;
    data.n = spec.n;
    data.p = spec.p;
    data.X = make_design(spec);
    data.Y = mean_response(data.X, truth.betaStar, truth.dStar);
    const double sigma = std::sqrt(spec.sigma2);
    rng::Engine eng(rng::derive(spec.seed, kTagNoise, replicate));
    for (std::size_t i = 0; i < spec.n; ++i) data.Y[i] += sigma * eng.normal();
    return {std::move(data), std::move(truth)};
}

std::vector<double> validation_response(const ScenarioSpec& spec,
                                        const linmodel::GroundTruth& truth,
                                        const linmodel::Matrix& X, std::uint64_t replicate) {
    std::vector<double> y = mean_response(X, truth.betaStar, truth.dStar);
    const double sigma = std::sqrt(truth.sigma2);
    rng::Engine eng(rng::derive(spec.seed, kTagVal, replicate));
    for (double& v : y) v += sigma * eng.normal();
    return y;
}

EmpiricalCurve empirical_curves(const ScenarioSpec& spec, const std::vector<double>& kGrid,
                                int replicates) {
    spec.validate();
    if (replicates < 2) throw std::invalid_argument("empirical_curves: replicates must be >= 2");
    for (double k : kGrid)
        if (!(k > 0.0)) throw std::invalid_argument("empirical_curves: K grid must be positive");

    const std::size_t m = kGrid.size();
    const auto reps = static_cast<std::size_t>(replicates);
    std::vector<std::vector<double>> fdpSlot(m, std::vector<double>(reps, 0.0));
    std::vector<std::vector<double>> mseSlot(m, std::vector<double>(reps, 0.0));

    par::parallel_for(reps, [&](std::size_t rep) {
        auto [data, truth] = generate(spec, rep);
        const linmodel::OrthoModel model = linmodel::orthonormalize(data);
        const std::vector<double> valY = validation_response(spec, truth, data.X, rep);
        for (std::size_t k = 0; k < m; ++k) {
            const linmodel::SelectionResult sel =
                linmodel::select_model(model, kGrid[k], spec.sigma2);
            fdpSlot[k][rep] = linmodel::fdp(sel, truth);
            mseSlot[k][rep] = linmodel::mse(sel, valY, data.X);
        }
    });

    EmpiricalCurve curve;
    curve.kGrid = kGrid;
    curve.replicates = replicates;
    curve.fdrHat.resize(m);
    curve.prHat.resize(m);
    curve.fdrCiHalfWidth.resize(m);
    curve.prCiHalfWidth.resize(m);
    const double root = std::sqrt(static_cast<double>(replicates));
    for (std::size_t k = 0; k < m; ++k) {
        curve.fdrHat[k] = par::mean(fdpSlot[k]);
        curve.prHat[k] = par::mean(mseSlot[k]);
        curve.fdrCiHalfWidth[k] = 1.96 * par::sample_sd(fdpSlot[k]) / root;
        curve.prCiHalfWidth[k] = 1.96 * par::sample_sd(mseSlot[k]) / root;
    }
    return curve;
}

linmodel::SelectionResult vfold_cv_select(const linmodel::Dataset& data, std::size_t folds,
                                          double sigma2, std::uint64_t seed) {
    (void)sigma2;  // accepted for signature parity with select_model; CV scores need no K
    if (folds < 2 || folds > data.n)
        throw std::invalid_argument("vfold_cv_select: folds must lie in [2, n]");
    const std::size_t n = data.n;
    const std::size_t q = std::min(data.n, data.p);

    // Seeded permutation, then contiguous blocks as folds.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng::Engine eng(rng::derive(seed, kTagFold));
    for (std::size_t i = n - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(eng.uniform01() * static_cast<double>(i + 1));
        if (j > i) j = i;
        std::swap(perm[i], perm[j]);
    }

    std::vector<double> sse(q + 1, 0.0);      // held-out squared error per dimension
    std::vector<std::size_t> points(q + 1, 0);  // held-out points scored per dimension
    std::size_t skipped = 0;

    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t lo = f * n / folds;
        const std::size_t hi = (f + 1) * n / folds;
        const std::size_t nHeld = hi - lo;
        const std::size_t nTrain = n - nHeld;

        linmodel::Dataset train;
        train.n = nTrain;
        train.p = q;
        train.Y.resize(nTrain);
        train.X = linmodel::Matrix(nTrain, q);
        linmodel::Matrix heldX(nHeld, q);
        std::vector<double> heldY(nHeld);
        for (std::size_t i = 0, t = 0, h = 0; i < n; ++i) {
            const std::size_t row = perm[i];
            if (i >= lo && i < hi) {
                heldY[h] = data.Y[row];
                for (std::size_t j = 0; j < q; ++j) heldX.at(h, j) = data.X.at(row, j);
                ++h;
            } else {
                train.Y[t] = data.Y[row];
                for (std::size_t j = 0; j < q; ++j) train.X.at(t, j) = data.X.at(row, j);
                ++t;
            }
        }

        // Dimensions at or past a rank-deficient training column are skipped for this
        // fold; retry on the truncated design to keep everything below the break.
        std::size_t qf = std::min(nTrain, q);
        linmodel::OrthoModel ortho;
        for (;;) {
            linmodel::Dataset sub = train;
            sub.p = qf;
            sub.X = linmodel::Matrix(nTrain, qf);
            std::copy(train.X.data.begin(),
                      train.X.data.begin() + static_cast<std::ptrdiff_t>(nTrain * qf),
                      sub.X.data.begin());
            try {
                ortho = linmodel::orthonormalize(sub);
                break;
            } catch (const linmodel::RankDeficiencyError& err) {
                qf = err.column - 1;
                if (qf == 0) {
                    ortho = linmodel::OrthoModel{};
                    ortho.n = nTrain;
                    break;
                }
            }
        }
        skipped += q - qf;

        // Held-out extension of each basis vector: u_j = X_train s with R s = e_j, so
        // the fold prediction grows one projection at a time.
        double heldSse = 0.0;
        for (std::size_t h = 0; h < nHeld; ++h) heldSse += heldY[h] * heldY[h];
        sse[0] += heldSse;
        points[0] += nHeld;
        std::vector<double> pred(nHeld, 0.0);
        std::vector<double> s;
        for (std::size_t j = 1; j <= qf; ++j) {
            s.assign(j, 0.0);
            s[j - 1] = 1.0 / ortho.R.at(j - 1, j - 1);
            for (std::size_t i = j - 1; i-- > 0;) {
                double acc = 0.0;
                for (std::size_t k = i + 1; k < j; ++k) acc -= ortho.R.at(i, k) * s[k];
                s[i] = acc / ortho.R.at(i, i);
            }
            const double c = ortho.yCoef[j - 1];
            heldSse = 0.0;
            for (std::size_t h = 0; h < nHeld; ++h) {
                double u = 0.0;
                for (std::size_t k = 0; k < j; ++k) u += heldX.at(h, k) * s[k];
                pred[h] += c * u;
                const double d = heldY[h] - pred[h];
                heldSse += d * d;
            }
            sse[j] += heldSse;
            points[j] += nHeld;
        }
    }
    if (skipped > 0) {
        std::cerr << "vfold_cv_select: skipped " << skipped
                  << " rank-deficient (fold, dimension) comparisons\n";
    }

    std::size_t best = 0;
    double bestScore = sse[0] / static_cast<double>(points[0]);
    for (std::size_t j = 1; j <= q; ++j) {
        if (points[j] == 0) continue;
        const double score = sse[j] / static_cast<double>(points[j]);
        if (score < bestScore) {
            bestScore = score;
            best = j;
        }
    }

    const linmodel::OrthoModel full = linmodel::orthonormalize(data);
    linmodel::SelectionResult sel;
    sel.K = 0.0;
    sel.dim = best;
    sel.rss = full.rssProf[best];
    sel.betaHat.assign(data.p, 0.0);
    for (std::size_t ji = best; ji-- > 0;) {
        double acc = full.yCoef[ji];
        for (std::size_t k = ji + 1; k < best; ++k) acc -= full.R.at(ji, k) * sel.betaHat[k];
        sel.betaHat[ji] = acc / full.R.at(ji, ji);
    }
    return sel;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec spec;
    const auto count = [&](const char* key, std::size_t cur) {
        if (!j.contains(key)) return cur;
        const auto v = j.at(key).get<long long>();
        if (v < 0) throw std::invalid_argument(std::string("ScenarioSpec: ") + key +
                                               " must be nonnegative");
        return static_cast<std::size_t>(v);
    };
    if (j.contains("name")) spec.name = j.at("name").get<std::string>();
    if (spec.name == "toy") spec = toy_spec(0);
    spec.n = count("n", spec.n);
    spec.p = count("p", spec.p);
    spec.dStar = count("dStar", spec.dStar);
    if (j.contains("sigma2")) spec.sigma2 = j.at("sigma2").get<double>();
    if (j.contains("coefBase")) spec.coefRule.base = j.at("coefBase").get<double>();
    if (j.contains("incLow")) spec.coefRule.incLow = j.at("incLow").get<double>();
    if (j.contains("incHigh")) spec.coefRule.incHigh = j.at("incHigh").get<double>();
    if (j.contains("seed")) {
        const auto& sj = j.at("seed");
        spec.seed = sj.is_number_unsigned()
                        ? sj.get<std::uint64_t>()
                        : static_cast<std::uint64_t>(sj.get<std::int64_t>());
    }
    if (j.contains("randomDesign")) spec.randomDesign = j.at("randomDesign").get<bool>();
    spec.validate();
    return spec;
}

nlohmann::ordered_json scenario_to_json(const ScenarioSpec& spec) {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["n"] = spec.n;
    j["p"] = spec.p;
    j["dStar"] = spec.dStar;
    j["sigma2"] = spec.sigma2;
    j["coefBase"] = spec.coefRule.base;
    j["incLow"] = spec.coefRule.incLow;
    j["incHigh"] = spec.coefRule.incHigh;
    j["seed"] = spec.seed;
    j["randomDesign"] = spec.randomDesign;
    return j;
}

std::string to_csv(const EmpiricalCurve& curve) {
    std::ostringstream out;
    out << "K,fdr,fdr_ci,pr,pr_ci\n";
    for (std::size_t i = 0; i < curve.kGrid.size(); ++i) {
        out << g17(curve.kGrid[i]) << "," << g17(curve.fdrHat[i]) << ","
            << g17(curve.fdrCiHalfWidth[i]) << "," << g17(curve.prHat[i]) << ","
            << g17(curve.prCiHalfWidth[i]) << "\n";
    }
    return out.str();
}

nlohmann::ordered_json to_json(const EmpiricalCurve& curve, const ScenarioSpec& spec) {
    nlohmann::ordered_json j;
    j["K"] = curve.kGrid;
    j["fdr"] = curve.fdrHat;
    j["fdr_ci"] = curve.fdrCiHalfWidth;
    j["pr"] = curve.prHat;
    j["pr_ci"] = curve.prCiHalfWidth;
    j["replicates"] = curve.replicates;
    j["scenario"] = scenario_to_json(spec);
    return j;
}

}  // namespace ordsel::simulation
