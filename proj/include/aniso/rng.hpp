#pragma once

// Deterministic RNG helpers: draws are built from the raw mt19937_64 stream
// (not from std distributions) so sequences are identical across platforms.

#include <cmath>
#include <cstdint>
#include <random>

#include "aniso/geometry.hpp"

namespace aniso {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::uint64_t integer(std::uint64_t n) { return eng_() % n; }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = uniform(), v = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u));
        has_spare_ = true;
        spare_ = r * std::sin(2.0 * kPi * v);
        return r * std::cos(2.0 * kPi * v);
    }
    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace aniso
