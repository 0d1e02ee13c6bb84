#pragma once

#include <array>
#include <cstdint>

namespace nfl {

// Philox4x32-10 block function. Counter-based: output is a pure function of
// (counter, key), so draws are reproducible across platforms and ensemble
// members can be given disjoint streams without coordination.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

// Deterministic stream over Philox blocks. The 64-bit seed forms the key;
// the stream id occupies the high counter words, the block index the low
// ones. Distinct (seed, stream) pairs never share a block.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 random bits.
    double uniform();

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int cursor_ = 4;
};

} // namespace nfl
