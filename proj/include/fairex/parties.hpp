#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fairex/attributes.hpp"
#include "fairex/crypto.hpp"
#include "fairex/rng.hpp"
#include "fairex/wire.hpp"

namespace fairex {

struct DuplicateSid : std::logic_error {
    explicit DuplicateSid(const SessionId& sid)
        : std::logic_error("sid already certified: " + sid.display()) {}
};

struct DuplicateBid : std::logic_error {
    explicit DuplicateBid(const OfferId& bid)
        : std::logic_error("bid already published: " + bid.display()) {}
};

// --- Party outputs, appended to the run transcript in order ---

struct OutCertReceived {
    SessionId sid;
    auto operator<=>(const OutCertReceived&) const = default;
};
struct OutOfferReceived {
    OfferId bid;
    auto operator<=>(const OutOfferReceived&) const = default;
};
struct OutMessage {
    OfferId bid;
    std::optional<Bytes> data; // nullopt when decryption fails under a key
                               // the chain accepted (corrupted-notary case)
    auto operator<=>(const OutMessage&) const = default;
};
struct OutPaymentReceived {
    OfferId bid;
    auto operator<=>(const OutPaymentReceived&) const = default;
};

using PartyOutput =
    std::variant<OutCertReceived, OutOfferReceived, OutMessage, OutPaymentReceived>;

std::string output_display(const PartyOutput& o);

// --- Outbound routing ---

struct SendConfidential {
    PartyId to;
    Message payload;
};
struct SendPublic { // multicast to every other party
    Message payload;
};
struct SendChain { // ledger submission
    Message payload;
};
using Emission = std::variant<SendConfidential, SendPublic, SendChain>;

// Why a handler dropped a message. Handlers never throw on adversarial
// input; the reason is recorded so transcripts stay explainable.
enum class PartyIgnore : std::uint8_t {
    None = 0,
    BadSignature,
    YMismatch,
    XMismatch,
    PlaintextMismatch,
    UnknownNotary,
    DuplicateCertificate,
    DuplicateOffer,
    NoSuchCertificate,
    NoSuchOffer,
    CriterionMismatch,
    CertificateInUse,
    AlreadyPending,
    AlreadyOpened,
    NoSuchPurchase,
    HashMismatch,
    AlreadyComplete,
    AlreadyClosed,
    NoPendingSale,
    AlreadyPaid,
    NoTransfer,
    NotAddressed,
};

const char* party_ignore_name(PartyIgnore r);

struct StepResult {
    std::vector<PartyOutput> outputs;
    std::vector<Emission> emissions;
    bool accepted = true; // false: dropped, no state change beyond dedup
    PartyIgnore reason = PartyIgnore::None;

    static StepResult ignore(PartyIgnore r) { return {{}, {}, false, r}; }
};

// Static registration map party-id → signature verify key, populated before
// the run starts.
class KeyDirectory {
public:
    void put(const PartyId& id, const VerifyKey& vk) { keys_[id] = vk; }
    const VerifyKey* find(const PartyId& id) const;

private:
    std::map<PartyId, VerifyKey> keys_;
};

// Common delivery surface the simulator drives. Parties are single-threaded
// deterministic machines; they mutate only on deliver/env calls.
class PartyMachine {
public:
    virtual ~PartyMachine() = default;
    virtual const PartyId& id() const = 0;
    virtual StepResult deliver(const Message& m) = 0;
};

// Certifies one (M, s) pair per sid and never reuses a sid.
class Notary : public PartyMachine {
public:
    Notary(PartyId id, SigKeyPair keys) : id_(std::move(id)), keys_(std::move(keys)) {}

    const PartyId& id() const override { return id_; }
    const VerifyKey& verify_key() const { return keys_.verify_key; }

    // Throws DuplicateSid on sid reuse. The certificate (including K and M)
    // travels to the seller over the confidential channel.
    virtual StepResult certify(const SessionId& sid, const PartyId& seller_id,
                               const Bytes& data, const AttributeSet& attrs, Rng& rng);

    StepResult deliver(const Message&) override {
        return StepResult::ignore(PartyIgnore::NotAddressed);
    }

    const std::set<SessionId>& used_sids() const { return used_sids_; }
    const SigningKey& signing_key() const { return keys_.signing_key; }

protected:
    // Enforces the one-certificate-per-sid rule for this notary.
    void claim_sid(const SessionId& sid);

private:
    PartyId id_;
    SigKeyPair keys_;
    std::set<SessionId> used_sids_;
};

// Builds the certificate message for (sid, data, attrs) under the given
// keys. Shared by the honest notary and the misbehaving variants, which
// tamper with individual fields after construction.
MsgCert build_cert(const SigningKey& sk, const SessionId& sid, const Bytes& data,
                   const AttributeSet& attrs, Rng& rng);

class Seller : public PartyMachine {
public:
    Seller(PartyId id, const KeyDirectory* directory, TokenCount initial_balance)
        : id_(std::move(id)), directory_(directory), balance_view_(initial_balance) {}

    const PartyId& id() const override { return id_; }

    // Step 2: accept iff all four clauses hold — signature over (s,Y,X),
    // Y = H(C), X = H(K), Dec(K,C) = M. Anything else is dropped.
    StepResult handle_cert(const MsgCert& m);

    // Step 4: first offer per bid wins; later ones are dropped.
    StepResult handle_offer(const MsgBuying& m);

    // Step 5, environment-triggered: answer offer bid with certificate sid
    // when the certified attributes match the offer's criterion. Each
    // certificate answers at most one offer (its key is spent on-chain at
    // settlement, so reuse would leak the goods to non-payers).
    StepResult sell(const SessionId& sid, const OfferId& bid);

    // Step 8, from the chain tape: one close per contract.
    StepResult handle_open(const MsgContractOpen& m);

    // Step 11, from the chain tape: payment acknowledged once, and only if
    // the balance actually grew (a close by a front-runner pays them, not us).
    StepResult handle_ledger(const MsgLedgerUpdate& m);

    StepResult deliver(const Message& m) override;

    const std::map<SessionId, MsgCert>& certificates() const { return certs_; }
    const std::map<OfferId, Criterion>& offers() const { return offers_; }
    const std::map<OfferId, SessionId>& pending_sales() const { return pending_; }

private:
    PartyId id_;
    const KeyDirectory* directory_;
    std::map<SessionId, MsgCert> certs_;
    std::map<OfferId, Criterion> offers_;
    std::map<OfferId, SessionId> pending_; // bid → sid answering it
    std::set<SessionId> sids_in_use_;
    std::set<OfferId> close_sent_;
    std::set<OfferId> paid_;
    TokenCount balance_view_ = 0; // own balance per the latest ledger snapshot
};

class Buyer : public PartyMachine {
public:
    Buyer(PartyId id, const KeyDirectory* directory)
        : id_(std::move(id)), directory_(directory) {}

    const PartyId& id() const override { return id_; }

    // Step 3, environment-triggered. Throws DuplicateBid on bid reuse.
    StepResult make_offer(const OfferId& bid, const Criterion& b, TokenCount amount = 1);

    // Step 6: open the contract iff the signature holds, Y matches C, the
    // certified attributes satisfy our own criterion, and we have not
    // already opened for this bid.
    StepResult handle_selling(const MsgSelling& m);

    // Step 10, from the chain tape: the key must match the X we escrowed
    // against. Decryption failure still completes the purchase with ⊥ —
    // the chain has already paid, there is nothing left to wait for.
    StepResult handle_close(const MsgContractClose& m);

    StepResult deliver(const Message& m) override;

    const std::map<OfferId, Criterion>& offers() const { return offers_; }
    bool purchase_open(const OfferId& bid) const { return pending_.contains(bid); }
    bool purchase_complete(const OfferId& bid) const { return complete_.contains(bid); }

private:
    struct Pending {
        Ciphertext cipher;
        Digest x;
    };

    PartyId id_;
    const KeyDirectory* directory_;
    std::map<OfferId, Criterion> offers_;
    std::map<OfferId, TokenCount> amounts_;
    std::map<OfferId, Pending> pending_;
    std::set<OfferId> complete_;
};

} // namespace fairex
