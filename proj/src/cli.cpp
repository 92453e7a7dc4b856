#include "ordsel/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "ordsel/calibration.hpp"
#include "ordsel/estimation.hpp"
#include "ordsel/fdrbounds.hpp"
#include "ordsel/linmodel.hpp"
#include "ordsel/parallel.hpp"
#include "ordsel/rng.hpp"
#include "ordsel/simulation.hpp"

namespace ordsel::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kTagVerifySim = 0x5e71;
constexpr std::uint64_t kTagVerifyFact = 0xfa27;

// Set by run() for the --seed flag; library callers of cmd_* see no override.
std::optional<std::uint64_t> g_seedOverride;

// Anything wrong with a config or data file; mapped to kExitConfig.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string g4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(path + ": line " + std::to_string(line) + ": " + e.what());
    }
}

std::uint64_t effective_seed(const json& j, std::uint64_t fallback = 0) {
    if (g_seedOverride) return *g_seedOverride;
    if (!j.contains("seed")) return fallback;
    const json& sj = j.at("seed");
    return sj.is_number_unsigned() ? sj.get<std::uint64_t>()
                                   : static_cast<std::uint64_t>(sj.get<std::int64_t>());
}

std::vector<double> parse_grid(const json& j) {
    std::vector<double> grid;
    if (j.contains("kGrid")) {
        grid = j.at("kGrid").get<std::vector<double>>();
    } else if (j.contains("kMin") || j.contains("kMax") || j.contains("kStep")) {
        const double lo = j.at("kMin").get<double>();
        const double hi = j.at("kMax").get<double>();
        const double step = j.at("kStep").get<double>();
        if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("bad kMin/kMax/kStep grid");
        for (int i = 0;; ++i) {
            const double k = lo + step * i;
            if (k > hi + step * 1e-9) break;
            grid.push_back(k);
        }
    } else {
        grid = calibration::default_k_grid();
    }
    if (grid.empty()) throw ConfigError("K grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw ConfigError("K grid entries must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw ConfigError("K grid must be strictly increasing");
    }
    return grid;
}

// Collects output files under outDir and finishes with manifest.json.
class Emitter {
public:
    Emitter(std::string command, std::string configPath, std::string outDir)
        : outDir_(std::move(outDir)), start_(std::chrono::steady_clock::now()) {
        manifest_.command = std::move(command);
        manifest_.configPath = std::move(configPath);
        std::filesystem::create_directories(outDir_);
    }

    void emit(const std::string& name, const std::string& content) {
        const std::string path = (std::filesystem::path(outDir_) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out || !(out << content) || !out.flush())
            throw std::runtime_error("cannot write '" + path + "'");
        out.close();
        manifest_.outputs.push_back({path, sha256_file(path)});
    }

    RunManifest finish(std::uint64_t seed) {
        manifest_.seed = seed;
        manifest_.wallTimeMs = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::steady_clock::now() - start_)
                                   .count();
        ordered_json j;
        j["command"] = manifest_.command;
        j["config"] = manifest_.configPath;
        j["seed"] = manifest_.seed;
        j["outputs"] = ordered_json::array();
        for (const auto& rec : manifest_.outputs)
            j["outputs"].push_back({{"path", rec.path}, {"sha256", rec.sha256}});
        j["wallTimeMs"] = manifest_.wallTimeMs;
        const std::string path = (std::filesystem::path(outDir_) / "manifest.json").string();
        std::ofstream out(path, std::ios::binary);
        if (!out || !(out << j.dump(2) << "\n"))
            throw std::runtime_error("cannot write '" + path + "'");
        return manifest_;
    }

private:
    std::string outDir_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

fdrbounds::BoundInput input_from_config(const json& j, std::uint64_t seed) {
    fdrbounds::BoundInput input;
    if (j.contains("scenario")) {
        simulation::ScenarioSpec spec = simulation::scenario_from_json(j.at("scenario"));
        spec.seed = seed;
        auto [data, truth] = simulation::generate(spec, 0);
        // Noiseless response isolates the signal projections <X beta*, u_k>.
        linmodel::Dataset noiseless = data;
        noiseless.Y.assign(data.n, 0.0);
        for (std::size_t c = 0; c < truth.dStar; ++c)
            for (std::size_t i = 0; i < data.n; ++i)
                noiseless.Y[i] += truth.betaStar[c] * data.X.at(i, c);
        const linmodel::OrthoModel ortho = linmodel::orthonormalize(noiseless);
        input.signalCoef.assign(ortho.yCoef.begin(),
                                ortho.yCoef.begin() + static_cast<std::ptrdiff_t>(truth.dStar));
        input.sigma2 = truth.sigma2;
        input.dStar = truth.dStar;
        input.q = ortho.q;
        return input;
    }
    input.signalCoef = j.at("signalCoef").get<std::vector<double>>();
    input.dStar = input.signalCoef.size();
    if (j.contains("dStar") && j.at("dStar").get<std::size_t>() != input.dStar)
        throw ConfigError("dStar disagrees with signalCoef length");
    input.sigma2 = j.value("sigma2", 1.0);
    if (!j.contains("q")) throw ConfigError("bounds config needs 'q'");
    input.q = j.at("q").get<std::size_t>();
    return input;
}

}  // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

RunManifest cmd_simulate(const std::string& configPath, const std::string& outDir) {
    const json j = load_config(configPath);
    simulation::ScenarioSpec spec;
    std::vector<double> grid;
    int replicates = 0;
    try {
        spec = simulation::scenario_from_json(j.contains("scenario") ? j.at("scenario") : j);
        spec.seed = effective_seed(j, spec.seed);
        grid = parse_grid(j);
        if (!j.contains("replicates")) throw ConfigError("simulate config needs 'replicates'");
        replicates = j.at("replicates").get<int>();
        if (replicates < 2) throw ConfigError("'replicates' must be >= 2");
    } catch (const json::exception& e) {
        throw ConfigError(configPath + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(configPath + ": " + e.what());
    }

    Emitter emitter("simulate", configPath, outDir);
    const simulation::EmpiricalCurve curve = simulation::empirical_curves(spec, grid, replicates);
    emitter.emit("curve.csv", simulation::to_csv(curve));
    emitter.emit("curve.json", simulation::to_json(curve, spec).dump(2) + "\n");
    return emitter.finish(spec.seed);
}

RunManifest cmd_bounds(const std::string& configPath, const std::string& outDir) {
    const json j = load_config(configPath);
    fdrbounds::BoundInput input;
    std::vector<double> grid;
    std::uint64_t seed = 0;
    int mcSamples = fdrbounds::kDefaultMcSamples;
    try {
        seed = effective_seed(j);
        input = input_from_config(j, seed);
        grid = parse_grid(j);
        mcSamples = j.value("mcSamples", fdrbounds::kDefaultMcSamples);
        if (mcSamples < 1) throw ConfigError("'mcSamples' must be >= 1");
    } catch (const json::exception& e) {
        throw ConfigError(configPath + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(configPath + ": " + e.what());
    }
    if (input.dStar >= input.q)
        throw calibration::SaturatedModelError("dStar >= q: both bounds are identically zero");

    Emitter emitter("bounds", configPath, outDir);
    const fdrbounds::PrTable pr =
        fdrbounds::make_pr_table(input.dStar, input.q, grid, mcSamples, seed);
    const fdrbounds::BoundCurve curve = fdrbounds::bound_curve(input, grid, pr);
    emitter.emit("bounds.csv", fdrbounds::to_csv(curve));
    emitter.emit("bounds.json", fdrbounds::to_json(curve, input, mcSamples, seed).dump(2) + "\n");
    return emitter.finish(seed);
}

RunManifest cmd_calibrate(const std::string& dataCsv, const std::string& configPath,
                          const std::string& outDir) {
    linmodel::Dataset data;
    try {
        data = linmodel::read_csv_file(dataCsv);
    } catch (const std::runtime_error& e) {
        throw ConfigError(dataCsv + ": " + e.what());
    }

    const json j = load_config(configPath);
    calibration::CalibrationConfig cfg;
    double windowFraction = 0.5;
    double pluginK = 4.0;
    auto estimator = estimation::SigmaEstimator::slope;
    try {
        cfg.alpha = j.value("alpha", 0.05);
        cfg.gamma = j.value("gamma", 0.1);
        cfg.kGrid = parse_grid(j);
        cfg.mcSamples = j.value("mcSamples", fdrbounds::kDefaultMcSamples);
        cfg.seed = effective_seed(j);
        cfg.validate();
        windowFraction = j.value("windowFraction", 0.5);
        pluginK = j.value("pluginK", 4.0);
        const std::string est = j.value("sigmaEstimator", "slope");
        if (est == "fallback")
            estimator = estimation::SigmaEstimator::fallback;
        else if (est != "slope")
            throw ConfigError("'sigmaEstimator' must be 'slope' or 'fallback'");
    } catch (const json::exception& e) {
        throw ConfigError(configPath + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(configPath + ": " + e.what());
    }

    Emitter emitter("calibrate", configPath, outDir);
    const linmodel::OrthoModel model = linmodel::orthonormalize(data);
    const estimation::PluginEstimate plugin =
        estimation::plugin_estimate(model, data, windowFraction, pluginK, estimator);

    calibration::CalibrationResult result;
    try {
        result = calibration::calibrate(model, plugin, cfg);
    } catch (const calibration::CalibrationFailedError& e) {
        // Leave the curve behind so the caller can pick new thresholds.
        emitter.emit("bounds_at_failure.csv", fdrbounds::to_csv(e.curve));
        std::cerr << "calibration failed; bound curve written to " << outDir
                  << "/bounds_at_failure.csv\n";
        throw;
    }

    const linmodel::SelectionResult sel =
        linmodel::select_model(model, result.kStar, plugin.sigma2Hat);
    ordered_json out = calibration::to_json(result, cfg);
    out["sigma2Hat"] = plugin.sigma2Hat;
    out["dHat"] = plugin.dHat;
    out["selectedDim"] = sel.dim;
    emitter.emit("calibration.json", out.dump(2) + "\n");

    std::ostringstream modelCsv;
    modelCsv << "j,coef\n";
    for (std::size_t i = 0; i < sel.betaHat.size(); ++i)
        modelCsv << (i + 1) << "," << g17(sel.betaHat[i]) << "\n";
    emitter.emit("selected_model.csv", modelCsv.str());

    std::cerr << "kStar=" << g4(result.kStar) << " dim=" << sel.dim
              << " sigma2Hat=" << g4(plugin.sigma2Hat)
              << " fallback=" << (result.fallbackUsed ? "true" : "false") << "\n";
    return emitter.finish(cfg.seed);
}

RunManifest cmd_verify(const std::string& configPath) {
    const auto start = std::chrono::steady_clock::now();
    const json j = load_config(configPath);
    fdrbounds::BoundInput input;
    std::vector<double> kList;
    std::uint64_t seed = 0;
    int mcSamples = 0;
    int simReplicates = 0;
    double prScale = 1.0;
    try {
        seed = effective_seed(j);
        input = input_from_config(j, seed);
        kList = j.value("kList", std::vector<double>{1.0, 2.0, 4.0, 8.0});
        mcSamples = j.value("mcSamples", 100000);
        simReplicates = j.value("simReplicates", mcSamples);
        if (mcSamples < 2 || simReplicates < 2)
            throw ConfigError("'mcSamples' and 'simReplicates' must be >= 2");
        if (j.value("corruptPr", false)) prScale = 0.5;
        if (input.q > 10) throw ConfigError("verify is limited to small instances (q <= 10)");
        if (input.dStar >= input.q) throw ConfigError("verify needs dStar < q");
        for (double k : kList)
            if (!(k > 0.0)) throw ConfigError("'kList' entries must be positive");
    } catch (const json::exception& e) {
        throw ConfigError(configPath + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(configPath + ": " + e.what());
    }

    // End-to-end oracle: full selection on a canonical-design instance whose signal
    // projections equal the configured coefficients.
    const std::size_t q = input.q;
    linmodel::Dataset base;
    base.n = q;
    base.p = q;
    base.X = linmodel::Matrix(q, q);
    for (std::size_t i = 0; i < q; ++i) base.X.at(i, i) = 1.0;
    linmodel::GroundTruth truth;
    truth.betaStar.assign(q, 0.0);
    std::copy(input.signalCoef.begin(), input.signalCoef.end(), truth.betaStar.begin());
    truth.sigma2 = input.sigma2;
    truth.dStar = input.dStar;
    const double sigma = std::sqrt(input.sigma2);

    const auto reps = static_cast<std::size_t>(simReplicates);
    std::vector<std::vector<double>> fdpSlot(kList.size(), std::vector<double>(reps, 0.0));
    par::parallel_for(reps, [&](std::size_t rep) {
        linmodel::Dataset data = base;
        data.Y.resize(q);
        rng::Engine eng(rng::derive(seed, kTagVerifySim, rep));
        for (std::size_t i = 0; i < q; ++i) data.Y[i] = truth.betaStar[i] + sigma * eng.normal();
        const linmodel::OrthoModel model = linmodel::orthonormalize(data);
        for (std::size_t k = 0; k < kList.size(); ++k) {
            const auto sel = linmodel::select_model(model, kList[k], input.sigma2);
            fdpSlot[k][rep] = linmodel::fdp(sel, truth);
        }
    });

    bool allOk = true;
    for (std::size_t k = 0; k < kList.size(); ++k) {
        const double simFdr = par::mean(fdpSlot[k]);
        const double simSe = par::sample_sd(fdpSlot[k]) / std::sqrt(static_cast<double>(reps));
        const fdrbounds::FactorizedTerms fact = fdrbounds::fdr_factorized_terms(
            input, kList[k], mcSamples, rng::derive(seed, kTagVerifyFact, k), prScale);
        const double diff = std::fabs(fact.value - simFdr);
        const double tol = 3.0 * std::sqrt(simSe * simSe + fact.mcStdErr * fact.mcStdErr);
        const bool ok = diff <= tol;
        allOk = allOk && ok;
        std::cout << "K=" << g17(kList[k]) << " factorized=" << g17(fact.value)
                  << " se=" << g17(fact.mcStdErr) << " simulated=" << g17(simFdr)
                  << " se=" << g17(simSe) << " diff=" << g17(diff) << " tol=" << g17(tol)
                  << (ok ? " ok" : " FAIL") << "\n";
    }
    if (!allOk)
        throw VerificationError("factorized and simulated FDR disagree beyond 3 standard errors");

    RunManifest manifest;
    manifest.command = "verify";
    manifest.configPath = configPath;
    manifest.seed = seed;
    manifest.wallTimeMs = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return manifest;
}

int run(int argc, char** argv) {
    CLI::App app{"Penalized model selection over nested collections with FDR bounds"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    int threads = 0;
    auto* seedOpt = app.add_option("--seed", seed, "Override every config seed");
    app.add_option("--threads", threads, "Cap worker threads (env ORDSEL_THREADS mirrors this)");

    std::string configPath, outDir, dataPath;
    auto* sim = app.add_subcommand("simulate", "Empirical FDR/PR curves for a scenario");
    sim->add_option("config", configPath, "JSON config")->required();
    sim->add_option("out", outDir, "Output directory")->required();
    sim->fallthrough();
    auto* bounds = app.add_subcommand("bounds", "FDR bound curves b, B, floor on a K grid");
    bounds->add_option("config", configPath, "JSON config")->required();
    bounds->add_option("out", outDir, "Output directory")->required();
    bounds->fallthrough();
    auto* calib = app.add_subcommand("calibrate", "Data-driven choice of K from a CSV dataset");
    calib->add_option("data", dataPath, "CSV dataset (Y, X1..Xp)")->required();
    calib->add_option("config", configPath, "JSON config")->required();
    calib->add_option("out", outDir, "Output directory")->required();
    calib->fallthrough();
    auto* verify = app.add_subcommand("verify", "Factorized FDR vs full-selection simulation");
    verify->add_option("config", configPath, "JSON config")->required();
    verify->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (threads > 0) par::set_thread_cap(threads);
    if (*seedOpt) g_seedOverride = seed;

    try {
        if (*sim) cmd_simulate(configPath, outDir);
        else if (*bounds) cmd_bounds(configPath, outDir);
        else if (*calib) cmd_calibrate(dataPath, configPath, outDir);
        else if (*verify) cmd_verify(configPath);
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const linmodel::RankDeficiencyError& e) {
        std::cerr << "degenerate model: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const estimation::DegenerateFitError& e) {
        std::cerr << "degenerate fit: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const calibration::SaturatedModelError& e) {
        std::cerr << "degenerate model: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const calibration::CalibrationFailedError& e) {
        std::cerr << "calibration failed: " << e.what() << "\n";
        return kExitCalibration;
    } catch (const VerificationError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return kExitVerify;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ordsel::cli
