#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace epidhgnn {

/// Deterministic PRNG (splitmix64 core) with named sub-streams.
///
/// All randomness in the toolkit flows from one master seed through
/// sub-streams derived by name (and optionally an index), so stages of the
/// pipeline can be re-run independently with identical results. The generator
/// is specified here rather than borrowed from <random> because libstdc++'s
/// distributions are not bit-reproducible across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(scramble(seed ^ kSeedSalt)) {}

    /// Child generator for a named sub-stream. Does not advance this stream.
    Rng stream(std::string_view name) const {
        return Rng(FromState{}, scramble(state_ ^ fnv1a(name)));
    }

    /// Child generator for an indexed sub-stream (e.g. one per episode).
    Rng stream(std::string_view name, std::uint64_t index) const {
        return Rng(FromState{}, scramble(scramble(state_ ^ fnv1a(name)) + index));
    }

    std::uint64_t nextU64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(nextU64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + uniform() * (b - a); }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniformInt(std::int64_t lo, std::int64_t hi) {
        const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return lo + static_cast<std::int64_t>(nextU64());
        const auto wide = static_cast<unsigned __int128>(nextU64()) * range;
        return lo + static_cast<std::int64_t>(wide >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniformInt(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct values from {0, ..., n-1}, in random order.
    std::vector<std::int64_t> sampleWithoutReplacement(std::int64_t n, std::int64_t k) {
        // Partial Fisher-Yates over a dense index pool.
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        std::vector<std::int64_t> out;
        out.reserve(static_cast<std::size_t>(k));
        for (std::int64_t i = 0; i < k; ++i) {
            const auto j = uniformInt(i, n - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    struct FromState {};
    Rng(FromState, std::uint64_t raw) : state_(raw) {}

    static constexpr std::uint64_t kSeedSalt = 0xE220A8397B1DCDAFULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t scramble(std::uint64_t z) { return mix(z + 0x9E3779B97F4A7C15ULL); }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    std::uint64_t state_;
};

}  // namespace epidhgnn
