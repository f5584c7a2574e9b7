#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace bbm {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a, used to tag experiment kinds when deriving streams.
constexpr std::uint64_t hash_tag(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of replica `replica` of an experiment tagged `tag`.
constexpr std::uint64_t derive_stream(std::uint64_t master, std::uint64_t tag,
                                      std::uint64_t replica) noexcept {
    return mix64((master ^ tag ^ replica) + kGoldenGamma);
}

/// Sub-stream of a stream (e.g. one t-grid point of a replica).
constexpr std::uint64_t derive_substream(std::uint64_t stream, std::uint64_t index) noexcept {
    return mix64(stream ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Counter-based generator: the i-th output is mix64(seed + i * gamma).
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    // Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t below(std::uint64_t n) noexcept {
        __extension__ using u128 = unsigned __int128;
        // Lemire's multiply-shift; the bias is below 2^-64 * n and irrelevant here.
        return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
    }

    double exponential(double rate = 1.0) noexcept { return -std::log(uniform()) / rate; }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bbm
