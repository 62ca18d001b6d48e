#pragma once

#include <cmath>
#include <cstdint>

namespace qrisk {

// Counter-based random stream. The i-th output is a pure function of
// (seed, stream_id, i), so streams split deterministically for parallel
// Monte Carlo: same (seed, stream-id) reproduces the identical sequence
// bit-for-bit, and distinct stream-ids decorrelate through the mixer.
// A stream must not be advanced from two threads at once.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id), key_(derive_key(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Child stream i: independent of this stream and of children with
    // other indices. Does not advance this stream.
    RngStream child(std::uint64_t i) const {
        return RngStream(seed_, mix(stream_ ^ mix(i + 0x9E3779B97F4A7C15ULL)));
    }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform on (0, 1]: never returns 0, so log(uniform()) is finite.
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;  // top 53 bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached
    // spare, so the stream state stays a plain counter.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

  private:
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
        return mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ mix(stream_id + 0xD1B54A32D192ED03ULL));
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace qrisk
