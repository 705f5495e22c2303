#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "tr/tensor.hpp"

namespace tr {

/** splitmix64 mixing step (used to derive independent stream seeds). */
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/** FNV-1a hash of a byte string (stream names, pairing hashes). */
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

/** Deterministic random stream. A stream is identified by (seed, name,
 *  counter); identical identifiers yield identical draws on every platform:
 *  the generator is the standard-pinned mt19937_64 and all floating-point
 *  draws are built from explicit 53-bit uniforms (member normal() is a
 *  hand-rolled Box-Muller transform, since std::normal_distribution is
 *  implementation-defined). */
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view stream, std::uint64_t counter = 0)
        : gen_(splitmix64(seed ^ splitmix64(fnv1a(stream) + 0x632be59bd9b4e019ull * counter))) {}

    std::uint64_t next_u64() { return gen_(); }

    /** Uniform double in [0, 1). */
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /** Uniform double in (0, 1]. */
    double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /** Uniform integer in [lo, hi] inclusive (rejection sampling, unbiased). */
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1ull;
        if (span == 0) return lo + static_cast<std::int64_t>(next_u64());
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return lo + static_cast<std::int64_t>(x % span);
    }

    /** Standard normal via Box-Muller. */
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586476925286766559 * u2);
        have_spare_ = true;
        return mag * std::cos(6.283185307179586476925286766559 * u2);
    }

    /** Circularly-symmetric complex normal with unit variance. */
    Complex normal_complex() {
        const double re = normal();
        const double im = normal();
        return Complex(re * 0x1.6a09e667f3bcdp-1, im * 0x1.6a09e667f3bcdp-1);  // 1/sqrt(2)
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tr
