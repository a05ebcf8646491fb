#pragma once

#include <cstdint>

#include "drt/vec.hpp"

namespace drt {

// splitmix64 finalizer
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Counter-based deterministic sample stream: the value at
// (seed, pixel, sample, dimension) is a pure function of the key, so renders
// are reproducible under any parallel schedule and perturbed re-renders see
// common random numbers.
struct Sampler {
    uint64_t seed = 0;
    uint32_t pixel = 0;
    uint32_t sample = 0;
    uint32_t dim = 0;

    Sampler() = default;
    Sampler(uint64_t seed_, uint32_t pixel_, uint32_t sample_)
        : seed(seed_), pixel(pixel_), sample(sample_) {}

    static double value_at(uint64_t seed, uint32_t pixel, uint32_t sample, uint32_t dim) {
        uint64_t h = mix64(seed);
        h = mix64(h ^ ((uint64_t(pixel) << 32) | uint64_t(sample)));
        h = mix64(h ^ uint64_t(dim));
        return double(h >> 11) * 0x1.0p-53;  // [0,1)
    }

    double next() { return value_at(seed, pixel, sample, dim++); }

    Vec2d next2() {
        const double a = next();
        const double b = next();
        return {a, b};
    }
};

}  // namespace drt
