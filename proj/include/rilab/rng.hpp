#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rilab {

// Philox4x32-10 counter-based generator.
//
// Stream rule: key = master seed; the upper 64 counter bits hold the stream id
// derived from a path of integers (experiment tag, replica index, walk index, ...)
// by stream_id(); the lower 64 bits count blocks. Every (seed, path) pair is an
// independent stream, so results do not depend on how replicas are scheduled.
class Rng {
public:
    using result_type = std::uint64_t;

    Rng() : Rng(0, 0) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : key_{lo(seed), hi(seed)}, stream_(stream) {}

    static Rng for_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        return Rng(seed, stream_id(path));
    }

    static std::uint64_t stream_id(std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = 0x243f6a8885a308d3ULL;
        for (auto p : path) h = mix(h ^ mix(p + 0x9e3779b97f4a7c15ULL));
        return h;
    }

    // Child stream, keyed on this stream's id.
    Rng split(std::uint64_t k) const {
        Rng r = *this;
        r.stream_ = mix(stream_ ^ mix(k + 0x632be59bd9b4e019ULL));
        r.block_ = 0;
        r.pos_ = 4;
        return r;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    std::uint32_t next32() {
        if (pos_ == 4) refill();
        return out_[pos_++];
    }
    result_type operator()() {
        std::uint64_t a = next32();
        return (a << 32) | next32();
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    // Uniform in (0,1].
    double uniform_pos() { return 1.0 - uniform(); }
    double exponential() { return -std::log(uniform_pos()); }

    // Unbiased integer in [0, n) (Lemire).
    std::uint32_t below(std::uint32_t n) {
        std::uint64_t m = static_cast<std::uint64_t>(next32()) * n;
        auto l = static_cast<std::uint32_t>(m);
        if (l < n) {
            std::uint32_t t = (0u - n) % n;
            while (l < t) {
                m = static_cast<std::uint64_t>(next32()) * n;
                l = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    std::uint64_t stream() const { return stream_; }

private:
    static std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
    static std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    void refill() {
        std::array<std::uint32_t, 4> c{lo(block_), hi(block_), lo(stream_), hi(stream_)};
        std::array<std::uint32_t, 2> k = key_;
        for (int r = 0; r < 10; ++r) {
            std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * c[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * c[2];
            c = {hi(p1) ^ c[1] ^ k[0], lo(p1), hi(p0) ^ c[3] ^ k[1], lo(p0)};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        out_ = c;
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> out_{};
    int pos_ = 4;
};

}  // namespace rilab
