#include "fairex/rng.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>
#include <vector>

namespace fairex {

static void ensure_sodium() {
    if (sodium_init() < 0)
        throw std::runtime_error("libsodium initialization failed");
}

Rng::Rng(std::uint64_t seed) {
    ensure_sodium();
    std::array<std::uint8_t, 32> s{};
    for (int i = 0; i < 8; ++i)
        s[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    crypto_hash_sha256(state_.data(), s.data(), s.size());
}

Rng::Rng(const std::array<std::uint8_t, 32>& seed) : state_(seed) {
    ensure_sodium();
}

void Rng::fill(std::uint8_t* out, std::size_t n) {
    // Ratchet: draw n+32 bytes from the current state, keep the first 32 as
    // the next state so earlier outputs are never re-derivable.
    std::vector<std::uint8_t> buf(n + 32);
    randombytes_buf_deterministic(buf.data(), buf.size(), state_.data());
    std::memcpy(state_.data(), buf.data(), 32);
    if (n > 0)
        std::memcpy(out, buf.data() + 32, n);
}

Bytes Rng::bytes(std::size_t n) {
    Bytes out(n);
    fill(out.data(), n);
    return out;
}

std::uint64_t Rng::next_u64() {
    std::uint8_t b[8];
    fill(b, sizeof b);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0)
        throw std::invalid_argument("Rng::below: zero bound");
    // Rejection sampling keeps the distribution exactly uniform.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

double Rng::unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Rng Rng::fork() {
    return Rng(array<32>());
}

} // namespace fairex
