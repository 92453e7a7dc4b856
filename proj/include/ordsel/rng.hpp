#pragma once

#include <cstdint>
#include <random>

namespace ordsel::rng {

// splitmix64 finalizer; used to decorrelate derived sub-seeds.
std::uint64_t mix(std::uint64_t z);

// Deterministic sub-seed for a named stream, optionally indexed (e.g. per replicate).
std::uint64_t derive(std::uint64_t seed, std::uint64_t tag);
std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

// Deterministic random source. Gaussians use an explicit Box-Muller transform over
// 53-bit uniforms so streams are bit-identical across platforms and standard-library
// implementations; a given seed always yields the same sequence.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    // Uniform on (0, 1]; never returns 0 so log() below is safe.
    double uniform01();
    double uniform(double lo, double hi);
    double normal();

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

}  // namespace ordsel::rng
