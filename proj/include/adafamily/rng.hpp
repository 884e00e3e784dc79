#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace adafam {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3", SC'11). Maps a 128-bit counter and a 64-bit key to 128
// pseudorandom bits. Constants follow the Random123 reference; see docs/rng.md.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// Sequential draws from one Philox stream. The key is the 64-bit seed; the
// counter is (block index lo, block index hi, stream lo, stream hi), so any
// (seed, stream) pair gives an independent, platform-independent sequence.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    // 53-bit uniform in [0, 1).
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one draw per call, the sine branch is discarded.
    double normal() noexcept;

    // Unbiased integer in [0, n) by modulo with rejection. n must be > 0.
    std::uint64_t below(std::uint64_t n) noexcept;

    template <class T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    void refill() noexcept;

    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxCounter buffer_{};
    unsigned used_ = 4;
};

// Stream identifiers reserved by the library, so data generation, splitting,
// initialization and per-epoch shuffling never share draws.
namespace streams {
inline constexpr std::uint64_t kDataGeneration = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kProblemGeneration = 4;
inline constexpr std::uint64_t kShuffleBase = std::uint64_t{1} << 32;  // + epoch index
} // namespace streams

} // namespace adafam
