#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordsel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;       // unreadable/invalid config or data
inline constexpr int kExitDegenerate = 3;   // rank deficiency, degenerate fit, saturated model
inline constexpr int kExitCalibration = 4;  // empty i1
inline constexpr int kExitVerify = 5;       // factorized vs simulated FDR disagree

struct OutputRecord {
    std::string path;
    std::string sha256;
};

// Every emitted file with its digest; identical config and seed reproduce identical
// digests.
struct RunManifest {
    std::string command;
    std::string configPath;
    std::uint64_t seed = 0;
    std::vector<OutputRecord> outputs;
    std::int64_t wallTimeMs = 0;
};

// Commands write their artifacts plus manifest.json under outDir and return the
// manifest. Errors are thrown; run() maps them onto the exit codes above.
RunManifest cmd_simulate(const std::string& configPath, const std::string& outDir);
RunManifest cmd_bounds(const std::string& configPath, const std::string& outDir);
RunManifest cmd_calibrate(const std::string& dataCsv, const std::string& configPath,
                          const std::string& outDir);
RunManifest cmd_verify(const std::string& configPath);

// Factorized-vs-simulated disagreement beyond 3 combined standard errors.
class VerificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path);

// Full command-line entry point (subcommands simulate | bounds | calibrate | verify,
// global --seed and --threads; ORDSEL_THREADS mirrors --threads).
int run(int argc, char** argv);

}  // namespace ordsel::cli
