#include "polymer/rng.hpp"

#include <cmath>
#include <numbers>

namespace polymer {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

Philox::Philox(std::array<std::uint32_t, 2> key, std::uint32_t site, std::uint64_t replica)
    : key_(key),
      counter_{0u, site, static_cast<std::uint32_t>(replica),
               static_cast<std::uint32_t>(replica >> 32)} {}

void Philox::refill() {
    block_ = philox_block(counter_, key_);
    ++counter_[0];
    used_ = 0;
}

std::uint32_t Philox::next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
}

std::uint64_t Philox::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double Philox::uniform() {
    // (k + 0.5) / 2^53 never hits 0 or 1.
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Philox::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

double Philox::exponential(double rate) { return -std::log(uniform()) / rate; }

RngStream RngStream::child(std::uint64_t tag) const {
    return {seed, splitmix64(domain ^ splitmix64(tag + 0x632BE59BD9B4E019ull)), replica};
}

Philox RngStream::substream(std::uint32_t site) const {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(domain));
    return Philox({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)}, site,
                  replica);
}

}  // namespace polymer
