#pragma once

#include <cstdint>
#include <random>

namespace strongenv {

// Deterministic random source: std::mt19937_64 with explicit output
// mappings.  The standard distribution templates are implementation-defined,
// so uniforms are derived here by hand: doubles take the top 53 bits of one
// engine draw, integers map one uniform double onto the closed range.  Every
// seeded stream in the project is therefore reproducible across toolchains.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64+u53";

    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [lo, hi], inclusive.
    int uniform_int(int lo, int hi)
    {
        const double span = static_cast<double>(hi - lo) + 1.0;
        int offset = static_cast<int>(uniform() * span);
        if (offset > hi - lo) offset = hi - lo;
        return lo + offset;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace strongenv
