#pragma once

#include <cmath>
#include <cstdint>

namespace orthoseg {

// PCG32 (O'Neill's pcg32_random_r). Fully specified so streams are identical
// across platforms:
//   state' = state * 6364136223846793005 + inc        (inc odd)
//   out    = rotr32(((state >> 18) ^ state) >> 27, state >> 59)
// Seeding follows the reference pcg32_srandom sequence.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed, uint64_t stream = 0) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform in [0, 1), 32-bit resolution: next_u32() / 2^32.
    double uniform() { return next_u32() * 0x1p-32; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in {0, .., n-1} via Lemire's multiply-shift; bias is < n/2^32
    // and irrelevant at our scales, in exchange for a fixed draw count.
    uint32_t uniform_int(uint32_t n) {
        return static_cast<uint32_t>((static_cast<uint64_t>(next_u32()) * n) >> 32);
    }

    // Standard normal via Box-Muller (two uniform draws per value, the second
    // branch discarded to keep the draw count fixed).
    double gaussian() {
        double u1 = (static_cast<double>(next_u32()) + 1.0) * 0x1p-32;  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    uint64_t state_;
    uint64_t inc_;
};

}  // namespace orthoseg
