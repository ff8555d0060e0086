#pragma once

#include <array>
#include <cstdint>

namespace hetlb {

/// Philox4x64-10 block function (Salmon et al., SC'11). Pure: the same
/// (counter, key) pair always yields the same four words.
using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;
PhiloxCounter philox4x64_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// What a stream is used for. Each purpose gets its own key so arrival,
/// service, sorting (V_k) and decision (W_k) randomness never overlap.
enum class StreamPurpose : std::uint8_t {
    arrivals = 1,
    services = 2,
    sorting = 3,
    decisions = 4,
    fvector = 5,
    synthetic = 6,
};

/// Counter-based random stream.
///
/// Stream-splitting scheme: key = (seed, replication << 32 | purpose << 24 | extra),
/// counter starts at zero and is incremented once per 256-bit block. Distinct
/// (seed, replication, purpose, extra) tuples give disjoint streams.
class RngStream {
public:
    RngStream() noexcept : RngStream(PhiloxKey{0, 0}) {}
    explicit RngStream(PhiloxKey key) noexcept : key_(key) {}

    static RngStream for_purpose(std::uint64_t seed, std::uint32_t replication,
                                 StreamPurpose purpose, std::uint32_t extra = 0);

    /// Sub-stream expanded deterministically from one 64-bit draw.
    static RngStream from_word(std::uint64_t word) noexcept {
        return RngStream(PhiloxKey{word, 0x5355425354524541ULL});
    }

    std::uint64_t next_u64() noexcept {
        if (pos_ == 4) refill();
        return buffer_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Unbiased integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    const PhiloxKey& key() const noexcept { return key_; }

private:
    void refill() noexcept;

    PhiloxKey key_;
    PhiloxCounter counter_{0, 0, 0, 0};
    PhiloxCounter buffer_{};
    int pos_ = 4;
};

}  // namespace hetlb
