#include "tcer/rng.hpp"

namespace tcer::rng {
namespace {

// Philox4x32 round constants (Salmon et al. reference values).
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    std::uint32_t out0 = hi1 ^ ctr[1] ^ k0;
    std::uint32_t out1 = lo1;
    std::uint32_t out2 = hi0 ^ ctr[3] ^ k1;
    std::uint32_t out3 = lo0;
    ctr[0] = out0;
    ctr[1] = out1;
    ctr[2] = out2;
    ctr[3] = out3;
}

// splitmix64 finalizer; used to derive child keys.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

Stream::Stream(std::uint64_t key_hi, std::uint64_t key_lo) : key_hi_(key_hi), key_lo_(key_lo) {}

Stream Stream::root(std::uint64_t seed) { return Stream(mix64(seed), mix64(seed ^ 0xA5A5A5A5A5A5A5A5ull)); }

Stream Stream::child(std::uint64_t index) const {
    std::uint64_t h = mix64(key_hi_ ^ mix64(index));
    std::uint64_t l = mix64(key_lo_ + 0x6C62272E07BB0142ull + index);
    return Stream(h, l);
}

void Stream::refill() {
    std::uint32_t ctr[4] = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(key_lo_),
        static_cast<std::uint32_t>(key_lo_ >> 32),
    };
    std::uint32_t k0 = static_cast<std::uint32_t>(key_hi_);
    std::uint32_t k1 = static_cast<std::uint32_t>(key_hi_ >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    buf_[0] = ctr[0];
    buf_[1] = ctr[1];
    buf_[2] = ctr[2];
    buf_[3] = ctr[3];
    buf_pos_ = 0;
    ++counter_;
}

std::uint64_t Stream::next_u64() {
    if (buf_pos_ > 2) refill();
    std::uint64_t lo = buf_[buf_pos_];
    std::uint64_t hi = buf_[buf_pos_ + 1];
    buf_pos_ += 2;
    return (hi << 32) | lo;
}

double Stream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Stream::categorical(std::span<const double> probs) {
    double u = uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

double Stream::symmetric(double scale) { return (uniform() * 2.0 - 1.0) * scale; }

}  // namespace tcer::rng
