#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vizsteg {

// ---------------------------------------------------------------------------
// Error hierarchy. Commands map these onto exit codes.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Payload/data does not fit the carrier (or a declared budget).
struct CapacityError : Error {
    using Error::Error;
};

// Malformed serialized input (metadata blob, config, checkpoint, ...).
struct FormatError : Error {
    using Error::Error;
};

// Tensor/image dimensions inconsistent with what an operation requires.
struct ShapeError : Error {
    using Error::Error;
};

// Model parameters violate an integrity requirement (e.g. singular 1x1 kernel).
struct ModelError : Error {
    using Error::Error;
};

// QR payload could not be recovered.
struct DecodeError : Error {
    using Error::Error;
};

// Invalid scalar argument (e.g. m_qr = 0).
struct ParamError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic PRNG. xoshiro256++ seeded through splitmix64; self-contained
// so that streams are identical across platforms and standard libraries.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed) {
        uint64_t x = seed;
        for (auto& si : s_) si = splitmix64(x);
        has_gauss_ = false;
        gauss_ = 0.0;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    uint64_t uniform_int(uint64_t n) {
        // Lemire-style rejection-free enough for our n; use modulo of wide product.
        const uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
        return static_cast<uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller (deterministic, no std::normal_distribution).
    double normal() {
        if (has_gauss_) {
            has_gauss_ = false;
            return gauss_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-300);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        gauss_ = r * std::sin(a);
        has_gauss_ = true;
        return r * std::cos(a);
    }

    // Derive an independent stream; mixes tag into the current seed space.
    Rng fork(uint64_t tag) {
        uint64_t x = next_u64() ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        return Rng(x);
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t s_[4]{};
    bool has_gauss_ = false;
    double gauss_ = 0.0;
};

// Stable per-purpose sub-seed derivation (pure function of inputs).
inline uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t index) {
    uint64_t x = seed ^ (stream * 0x9e3779b97f4a7c15ULL) ^ (index * 0xc2b2ae3d27d4eb4fULL);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// CRC-32 (IEEE 802.3), used for the info-text integrity checksum.
uint32_t crc32(const void* data, size_t n);
inline uint32_t crc32(const std::string& s) { return crc32(s.data(), s.size()); }

}  // namespace vizsteg
