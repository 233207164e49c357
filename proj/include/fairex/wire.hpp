#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fairex/attributes.hpp"
#include "fairex/bytes.hpp"
#include "fairex/crypto.hpp"

namespace fairex {

using PartyId = std::string;
using TokenCount = std::uint64_t;

// Truncated, trailing octets, unknown tag, non-canonical field order. The
// receiving party treats the message as adversarial noise and ignores it.
struct MalformedEncoding : std::runtime_error {
    explicit MalformedEncoding(const std::string& what)
        : std::runtime_error("malformed encoding: " + what) {}
};

// Certificate session id, structured as (issuing notary, per-notary suffix).
struct SessionId {
    PartyId notary_id;
    std::array<std::uint8_t, 8> suffix{};
    auto operator<=>(const SessionId&) const = default;

    std::string display() const;
};

// Offer id, structured as (publishing buyer, per-buyer suffix).
struct OfferId {
    PartyId buyer_id;
    std::array<std::uint8_t, 8> suffix{};
    auto operator<=>(const OfferId&) const = default;

    std::string display() const;
};

// What the notary signs: exactly this triple and nothing else.
struct CertBody {
    AttributeSet s;
    Digest y; // H(C)
    Digest x; // H(K)
};

// --- The closed protocol message alphabet ---

struct MsgCertifyInput {
    SessionId sid;
    PartyId seller_id;
    Bytes data; // M
    AttributeSet attrs;
    auto operator<=>(const MsgCertifyInput&) const = default;
};

struct MsgCert {
    SessionId sid;
    SymKey key;
    Bytes data; // M
    Ciphertext cipher;
    AttributeSet attrs;
    Digest y;
    Digest x;
    Signature sig;
    auto operator<=>(const MsgCert&) const = default;
};

struct MsgBuying {
    OfferId bid;
    Criterion criterion;
    auto operator<=>(const MsgBuying&) const = default;
};

struct MsgSelling {
    OfferId bid;
    PartyId notary_id;
    Ciphertext cipher;
    AttributeSet attrs;
    Digest y;
    Digest x;
    Signature sig;
    auto operator<=>(const MsgSelling&) const = default;
};

struct MsgContractOpen {
    OfferId bid;
    Digest condition; // X
    TokenCount amount = 0;
    auto operator<=>(const MsgContractOpen&) const = default;
};

struct MsgContractClose {
    OfferId bid;
    SymKey key;
    auto operator<=>(const MsgContractClose&) const = default;
};

struct MsgLedgerUpdate {
    OfferId bid; // the contract whose settlement produced this update
    std::map<PartyId, TokenCount> balances;
    auto operator<=>(const MsgLedgerUpdate&) const = default;
};

using Message = std::variant<MsgCertifyInput, MsgCert, MsgBuying, MsgSelling,
                             MsgContractOpen, MsgContractClose, MsgLedgerUpdate>;

enum class MessageTag : std::uint8_t {
    CertifyInput = 0x01,
    Cert = 0x02,
    Buying = 0x03,
    Selling = 0x04,
    ContractOpen = 0x05,
    ContractClose = 0x06,
    LedgerUpdate = 0x07,
};

MessageTag message_tag(const Message& m);
const char* tag_name(MessageTag t);

// Deterministic canonical encoding: tag octet, fixed field order, u32
// big-endian length prefixes on variable fields. Identical messages encode
// to identical octets. Throws std::invalid_argument on messages violating
// well-formedness (empty party identifier).
Bytes encode(const Message& m);

// Inverse of encode. Throws MalformedEncoding for any octet string encode
// cannot produce, including trailing octets and non-canonical orderings.
Message decode(ByteSpan bytes);

// Canonical octets the notary signs. One representation, shared by signer
// and both verifiers, so signature checks are encoding-independent.
Bytes encode_cert_body(const CertBody& body);

} // namespace fairex
