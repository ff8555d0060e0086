#include "hetlb/rng.hpp"

namespace hetlb {

namespace {

__extension__ typedef unsigned __int128 u128;

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) noexcept {
    const u128 p = static_cast<u128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace

PhiloxCounter philox4x64_10(PhiloxCounter c, PhiloxKey k) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

RngStream RngStream::for_purpose(std::uint64_t seed, std::uint32_t replication,
                                 StreamPurpose purpose, std::uint32_t extra) {
    const std::uint64_t tag = (static_cast<std::uint64_t>(replication) << 32) |
                              (static_cast<std::uint64_t>(purpose) << 24) |
                              (static_cast<std::uint64_t>(extra) & 0xFFFFFFULL);
    return RngStream(PhiloxKey{seed, tag});
}

void RngStream::refill() noexcept {
    // 256-bit counter increment with carry
    for (auto& word : counter_) {
        if (++word != 0) break;
    }
    buffer_ = philox4x64_10(counter_, key_);
    pos_ = 0;
}

std::uint64_t RngStream::below(std::uint64_t bound) noexcept {
    // Lemire's multiply-shift with rejection
    u128 m = static_cast<u128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<u128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace hetlb
