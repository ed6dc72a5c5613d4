#pragma once

#include <array>
#include <cstdint>

namespace polymer {

// Philox4x32-10 counter-based generator. A substream is identified by its key
// (derived from seed and domain) and the upper three counter words (site and
// replica); the lowest counter word walks through the stream. Two substreams
// with different (site, replica) can never overlap.
class Philox {
public:
    Philox(std::array<std::uint32_t, 2> key, std::uint32_t site, std::uint64_t replica);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on the open interval (0,1) with 53 bits of resolution.
    double uniform();
    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();
    // Exponential with the given rate.
    double exponential(double rate);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

// Handle passed to every stochastic operation. It names a family of disjoint
// substreams: (seed, domain) select the Philox key, replica and site select
// the counter prefix.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t domain = 0;
    std::uint64_t replica = 0;

    RngStream with_replica(std::uint64_t r) const { return {seed, domain, r}; }
    // Derives an unrelated domain, e.g. one per t-point of a trace.
    RngStream child(std::uint64_t tag) const;

    Philox substream(std::uint32_t site) const;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace polymer
