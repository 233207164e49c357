#pragma once

#include <array>
#include <cstdint>

#include "fairex/bytes.hpp"

namespace fairex {

// Deterministic randomness source. Every random choice in a run (keys,
// nonces, policy decisions) is drawn from one of these, so a run is a pure
// function of its seed. Single-owner: not shareable between threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    explicit Rng(const std::array<std::uint8_t, 32>& seed);

    void fill(std::uint8_t* out, std::size_t n);
    Bytes bytes(std::size_t n);

    template <std::size_t N>
    std::array<std::uint8_t, N> array() {
        std::array<std::uint8_t, N> a;
        fill(a.data(), a.size());
        return a;
    }

    std::uint64_t next_u64();
    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    // Uniform double in [0, 1).
    double unit();

    // Derives an independent child stream; advances this stream.
    Rng fork();

private:
    std::array<std::uint8_t, 32> state_;
};

} // namespace fairex
