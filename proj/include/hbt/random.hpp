#pragma once

// Counter-based random streams. The stream for (seed, flash, substream) is a
// pure function of those values, so flashes may be generated in any order or
// on any thread and still reproduce bit for bit.

#include <array>
#include <cstdint>
#include <limits>

namespace hbt {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

private:
    static Counter single_round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// UniformRandomBitGenerator over a Philox block sequence.
class FlashStream {
public:
    using result_type = std::uint32_t;

    FlashStream(std::uint64_t seed, std::uint64_t flash_index, std::uint32_t substream = 0)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          base_{std::uint32_t(flash_index), std::uint32_t(flash_index >> 32), substream} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 4) refill();
        return block_[used_++];
    }

    /// Uniform double in (0, 1), 53 random bits, never exactly 0 or 1.
    double uniform() {
        const std::uint64_t hi = (*this)(), lo = (*this)();
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return (double(bits) + 0.5) * 0x1.0p-53;
    }

private:
    void refill() {
        block_ = Philox4x32::apply({base_[0], base_[1], base_[2], block_counter_++}, key_);
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::array<std::uint32_t, 3> base_;
    std::uint32_t block_counter_ = 0;
    Philox4x32::Counter block_{};
    int used_ = 4;
};

}  // namespace hbt
