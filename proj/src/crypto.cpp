#include "fairex/crypto.hpp"

#include <sodium.h>

#include <cstring>

namespace fairex {

static void ensure_sodium() {
    if (sodium_init() < 0)
        throw std::runtime_error("libsodium initialization failed");
}

static_assert(kSymKeyLen == crypto_aead_chacha20poly1305_ietf_KEYBYTES);
static_assert(kNonceLen == crypto_aead_chacha20poly1305_ietf_NPUBBYTES);
static_assert(kAuthTagLen == crypto_aead_chacha20poly1305_ietf_ABYTES);
static_assert(kDigestLen == crypto_hash_sha256_BYTES);
static_assert(kSignatureLen == crypto_sign_BYTES);
static_assert(kVerifyKeyLen == crypto_sign_PUBLICKEYBYTES);
static_assert(kSigningKeyLen == crypto_sign_SECRETKEYBYTES);

Bytes Ciphertext::canonical() const {
    Bytes out;
    out.reserve(nonce.size() + body.size());
    out.insert(out.end(), nonce.begin(), nonce.end());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

VerifyKey VerifyKey::from_bytes(ByteSpan b) {
    if (b.size() != kVerifyKeyLen)
        throw MalformedKey("verify key has wrong length");
    VerifyKey vk;
    std::memcpy(vk.bytes.data(), b.data(), kVerifyKeyLen);
    return vk;
}

VerifyKey SigningKey::verify_key() const {
    // Ed25519 secret keys carry the public half in their trailing 32 octets.
    VerifyKey vk;
    std::memcpy(vk.bytes.data(), bytes.data() + 32, 32);
    return vk;
}

SymKey gen_key(Rng& rng) {
    SymKey k;
    rng.fill(k.bytes.data(), k.bytes.size());
    return k;
}

Ciphertext encrypt(const SymKey& key, ByteSpan plaintext, Rng& rng) {
    ensure_sodium();
    if (plaintext.size() > kMaxPlaintextLen)
        throw PlaintextTooLarge();

    Ciphertext c;
    rng.fill(c.nonce.data(), c.nonce.size());
    c.body.resize(plaintext.size() + kAuthTagLen);

    unsigned long long clen = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(
        c.body.data(), &clen,
        plaintext.data(), plaintext.size(),
        nullptr, 0, nullptr,
        c.nonce.data(), key.bytes.data());
    c.body.resize(static_cast<std::size_t>(clen));
    return c;
}

Bytes decrypt(const SymKey& key, const Ciphertext& c) {
    ensure_sodium();
    if (c.body.size() < kAuthTagLen)
        throw AuthenticationFailure();

    Bytes out(c.body.size() - kAuthTagLen);
    unsigned long long mlen = 0;
    int rc = crypto_aead_chacha20poly1305_ietf_decrypt(
        out.data(), &mlen, nullptr,
        c.body.data(), c.body.size(),
        nullptr, 0,
        c.nonce.data(), key.bytes.data());
    if (rc != 0)
        throw AuthenticationFailure();
    out.resize(static_cast<std::size_t>(mlen));
    return out;
}

Digest hash(ByteSpan data) {
    ensure_sodium();
    Digest d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
}

SigKeyPair gen_sig_keypair(Rng& rng) {
    ensure_sodium();
    auto seed = rng.array<crypto_sign_SEEDBYTES>();
    SigKeyPair kp;
    crypto_sign_seed_keypair(kp.verify_key.bytes.data(), kp.signing_key.bytes.data(),
                             seed.data());
    return kp;
}

Signature sign(const SigningKey& sk, ByteSpan msg) {
    ensure_sodium();
    Signature sig;
    unsigned long long siglen = 0;
    crypto_sign_detached(sig.bytes.data(), &siglen, msg.data(), msg.size(),
                         sk.bytes.data());
    return sig;
}

bool verify(const VerifyKey& vk, ByteSpan msg, const Signature& sig) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(),
                                       vk.bytes.data()) == 0;
}

} // namespace fairex
