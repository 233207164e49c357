#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>

#include "fairex/bytes.hpp"
#include "fairex/rng.hpp"

namespace fairex {

// Scheme constants. The rest of the code reaches these only through the
// named constants so the suite stays swappable behind this header.
inline constexpr std::size_t kSymKeyLen = 32;
inline constexpr std::size_t kNonceLen = 12;
inline constexpr std::size_t kAuthTagLen = 16;
inline constexpr std::size_t kDigestLen = 32;
inline constexpr std::size_t kSignatureLen = 64;
inline constexpr std::size_t kVerifyKeyLen = 32;
inline constexpr std::size_t kSigningKeyLen = 64;
inline constexpr std::size_t kMaxPlaintextLen = std::size_t{1} << 20;

struct PlaintextTooLarge : std::runtime_error {
    PlaintextTooLarge() : std::runtime_error("plaintext exceeds configured maximum") {}
};

// Wrong key or tampered ciphertext. In protocol terms this marks a
// malformed or forged certificate.
struct AuthenticationFailure : std::runtime_error {
    AuthenticationFailure() : std::runtime_error("ciphertext authentication failed") {}
};

struct MalformedKey : std::runtime_error {
    explicit MalformedKey(const char* what) : std::runtime_error(what) {}
};

struct SymKey {
    std::array<std::uint8_t, kSymKeyLen> bytes{};
    auto operator<=>(const SymKey&) const = default;
};

struct Digest {
    std::array<std::uint8_t, kDigestLen> bytes{};
    auto operator<=>(const Digest&) const = default;
};

struct Ciphertext {
    std::array<std::uint8_t, kNonceLen> nonce{};
    Bytes body; // ciphertext || tag
    auto operator<=>(const Ciphertext&) const = default;

    // Canonical octet form (nonce || body); hashes and encodings use this.
    Bytes canonical() const;
};

struct Signature {
    std::array<std::uint8_t, kSignatureLen> bytes{};
    auto operator<=>(const Signature&) const = default;
};

struct VerifyKey {
    std::array<std::uint8_t, kVerifyKeyLen> bytes{};
    auto operator<=>(const VerifyKey&) const = default;

    static VerifyKey from_bytes(ByteSpan b);
};

struct SigningKey {
    std::array<std::uint8_t, kSigningKeyLen> bytes{};

    VerifyKey verify_key() const;
};

struct SigKeyPair {
    SigningKey signing_key;
    VerifyKey verify_key;
};

SymKey gen_key(Rng& rng);

Ciphertext encrypt(const SymKey& key, ByteSpan plaintext, Rng& rng);

// Returns the plaintext iff (key, c) is the matching pair; throws
// AuthenticationFailure otherwise.
Bytes decrypt(const SymKey& key, const Ciphertext& c);

Digest hash(ByteSpan data);

SigKeyPair gen_sig_keypair(Rng& rng);

Signature sign(const SigningKey& sk, ByteSpan msg);

bool verify(const VerifyKey& vk, ByteSpan msg, const Signature& sig);

} // namespace fairex
