#include "ordsel/rng.hpp"

#include <cmath>
#include <numbers>

namespace ordsel::rng {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return mix(seed ^ mix(tag));
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return mix(derive(seed, tag) ^ (index * 0x9e3779b97f4a7c15ull));
}

double Engine::uniform01() {
    // Top 53 bits, shifted into (0, 1].
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
}

double Engine::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double Engine::normal() {
    if (hasSpare_) {
        hasSpare_ = false;
        return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    hasSpare_ = true;
    return radius * std::cos(angle);
}

}  // namespace ordsel::rng
