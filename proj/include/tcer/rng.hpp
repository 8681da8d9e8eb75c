#pragma once

// Splittable counter-based random streams (Philox4x32-10).
//
// Every consumer owns a named stream derived from the run seed by child()
// splits, so parallel rollout generation draws exactly what a serial run
// would. Streams are value types; copying one replays its draws.

#include <cstdint>
#include <span>

namespace tcer::rng {

class Stream {
public:
    // Root stream of a run.
    static Stream root(std::uint64_t seed);

    // Derived stream; children with distinct indices are independent, and
    // child(i) of equal parents is always the same stream.
    Stream child(std::uint64_t index) const;

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Index i with probability proportional to probs[i]; probs must be a
    // distribution (kernel outputs are). Walks the CDF, clamps to the last
    // index against rounding shortfall at the top.
    int categorical(std::span<const double> probs);

    // Uniform in [-scale, scale).
    double symmetric(double scale);

private:
    Stream(std::uint64_t key_hi, std::uint64_t key_lo);

    void refill();

    std::uint64_t key_hi_;
    std::uint64_t key_lo_;
    std::uint64_t counter_ = 0;
    std::uint32_t buf_[4] = {0, 0, 0, 0};
    int buf_pos_ = 4;  // empty
};

}  // namespace tcer::rng
