#pragma once

// Counter-based random streams (Philox4x32-10). A stream is fully determined
// by (seed, stream id); draws are addressed by a 64-bit counter, so streams
// can be split without any shared state.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace persist {

namespace detail {

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                   std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

// splitmix64 finalizer, used for the documented stream-splitting rule.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Identifies an independent random stream.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    /// Child stream for a sub-task. The rule is stream' = mix64(stream ^ mix64(tag + 1)),
    /// so a (master seed, wall id, replicate id) triple maps to a fixed stream.
    constexpr RngStream child(std::uint64_t tag) const {
        return {seed, detail::mix64(stream ^ detail::mix64(tag + 1))};
    }

    friend constexpr bool operator==(const RngStream&, const RngStream&) = default;
};

/// UniformRandomBitGenerator over a RngStream. Copyable; copies replay the same draws.
class Rng {
public:
    using result_type = std::uint32_t;

    explicit Rng(RngStream s) : stream_(s) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (lane_ == 4) refill();
        return block_[lane_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal by Box-Muller; the spare variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    const RngStream& stream() const { return stream_; }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
            static_cast<std::uint32_t>(stream_.stream), static_cast<std::uint32_t>(stream_.stream >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(stream_.seed),
                                               static_cast<std::uint32_t>(stream_.seed >> 32)};
        block_ = detail::philox4x32_10(ctr, key);
        ++counter_;
        lane_ = 0;
    }

    RngStream stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int lane_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace persist
