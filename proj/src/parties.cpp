#include "fairex/parties.hpp"

#include <algorithm>

namespace fairex {

std::string output_display(const PartyOutput& o) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, OutCertReceived>) {
                return "CertReceived(" + v.sid.display() + ")";
            } else if constexpr (std::is_same_v<T, OutOfferReceived>) {
                return "OfferReceived(" + v.bid.display() + ")";
            } else if constexpr (std::is_same_v<T, OutMessage>) {
                return "Message(" + v.bid.display() + ", " +
                       (v.data ? hex_encode(*v.data) : std::string{"bot"}) + ")";
            } else {
                return "PaymentReceived(" + v.bid.display() + ")";
            }
        },
        o);
}

const char* party_ignore_name(PartyIgnore r) {
    switch (r) {
        case PartyIgnore::None: return "none";
        case PartyIgnore::BadSignature: return "bad_signature";
        case PartyIgnore::YMismatch: return "y_mismatch";
        case PartyIgnore::XMismatch: return "x_mismatch";
        case PartyIgnore::PlaintextMismatch: return "plaintext_mismatch";
        case PartyIgnore::UnknownNotary: return "unknown_notary";
        case PartyIgnore::DuplicateCertificate: return "duplicate_certificate";
        case PartyIgnore::DuplicateOffer: return "duplicate_offer";
        case PartyIgnore::NoSuchCertificate: return "no_such_certificate";
        case PartyIgnore::NoSuchOffer: return "no_such_offer";
        case PartyIgnore::CriterionMismatch: return "criterion_mismatch";
        case PartyIgnore::CertificateInUse: return "certificate_in_use";
        case PartyIgnore::AlreadyPending: return "already_pending";
        case PartyIgnore::AlreadyOpened: return "already_opened";
        case PartyIgnore::NoSuchPurchase: return "no_such_purchase";
        case PartyIgnore::HashMismatch: return "hash_mismatch";
        case PartyIgnore::AlreadyComplete: return "already_complete";
        case PartyIgnore::AlreadyClosed: return "already_closed";
        case PartyIgnore::NoPendingSale: return "no_pending_sale";
        case PartyIgnore::AlreadyPaid: return "already_paid";
        case PartyIgnore::NoTransfer: return "no_transfer";
        case PartyIgnore::NotAddressed: return "not_addressed";
    }
    return "unknown";
}

const VerifyKey* KeyDirectory::find(const PartyId& id) const {
    auto it = keys_.find(id);
    return it == keys_.end() ? nullptr : &it->second;
}

MsgCert build_cert(const SigningKey& sk, const SessionId& sid, const Bytes& data,
                   const AttributeSet& attrs, Rng& rng) {
    SymKey k = gen_key(rng);
    Ciphertext c = encrypt(k, data, rng);
    Digest y = hash(c.canonical());
    Digest x = hash(k.bytes);
    Signature sig = sign(sk, encode_cert_body({attrs, y, x}));
    return MsgCert{sid, std::move(k), data, std::move(c), attrs, y, x, sig};
}

void Notary::claim_sid(const SessionId& sid) {
    if (used_sids_.contains(sid)) throw DuplicateSid(sid);
    used_sids_.insert(sid);
}

StepResult Notary::certify(const SessionId& sid, const PartyId& seller_id,
                           const Bytes& data, const AttributeSet& attrs, Rng& rng) {
    claim_sid(sid);
    MsgCert cert = build_cert(keys_.signing_key, sid, data, attrs, rng);
    StepResult r;
    r.emissions.push_back(SendConfidential{seller_id, std::move(cert)});
    return r;
}

StepResult Seller::handle_cert(const MsgCert& m) {
    if (certs_.contains(m.sid)) return StepResult::ignore(PartyIgnore::DuplicateCertificate);

    const VerifyKey* vk = directory_->find(m.sid.notary_id);
    if (!vk) return StepResult::ignore(PartyIgnore::UnknownNotary);
    if (!verify(*vk, encode_cert_body({m.attrs, m.y, m.x}), m.sig))
        return StepResult::ignore(PartyIgnore::BadSignature);
    if (hash(m.cipher.canonical()) != m.y) return StepResult::ignore(PartyIgnore::YMismatch);
    if (hash(m.key.bytes) != m.x) return StepResult::ignore(PartyIgnore::XMismatch);
    try {
        if (decrypt(m.key, m.cipher) != m.data)
            return StepResult::ignore(PartyIgnore::PlaintextMismatch);
    } catch (const AuthenticationFailure&) {
        return StepResult::ignore(PartyIgnore::PlaintextMismatch);
    }

    certs_.emplace(m.sid, m);
    StepResult r;
    r.outputs.push_back(OutCertReceived{m.sid});
    return r;
}

StepResult Seller::handle_offer(const MsgBuying& m) {
    if (offers_.contains(m.bid)) return StepResult::ignore(PartyIgnore::DuplicateOffer);
    offers_.emplace(m.bid, m.criterion);
    StepResult r;
    r.outputs.push_back(OutOfferReceived{m.bid});
    return r;
}

StepResult Seller::sell(const SessionId& sid, const OfferId& bid) {
    auto cert_it = certs_.find(sid);
    if (cert_it == certs_.end()) return StepResult::ignore(PartyIgnore::NoSuchCertificate);
    auto offer_it = offers_.find(bid);
    if (offer_it == offers_.end()) return StepResult::ignore(PartyIgnore::NoSuchOffer);
    if (pending_.contains(bid)) return StepResult::ignore(PartyIgnore::AlreadyPending);
    if (sids_in_use_.contains(sid)) return StepResult::ignore(PartyIgnore::CertificateInUse);
    const MsgCert& cert = cert_it->second;
    if (!eval_criterion(cert.attrs, offer_it->second))
        return StepResult::ignore(PartyIgnore::CriterionMismatch);

    pending_.emplace(bid, sid);
    sids_in_use_.insert(sid);
    StepResult r;
    r.emissions.push_back(SendConfidential{
        bid.buyer_id,
        MsgSelling{bid, sid.notary_id, cert.cipher, cert.attrs, cert.y, cert.x, cert.sig}});
    return r;
}

StepResult Seller::handle_open(const MsgContractOpen& m) {
    auto it = pending_.find(m.bid);
    if (it == pending_.end()) return StepResult::ignore(PartyIgnore::NoPendingSale);
    if (close_sent_.contains(m.bid)) return StepResult::ignore(PartyIgnore::AlreadyClosed);

    close_sent_.insert(m.bid);
    StepResult r;
    r.emissions.push_back(SendChain{MsgContractClose{m.bid, certs_.at(it->second).key}});
    return r;
}

StepResult Seller::handle_ledger(const MsgLedgerUpdate& m) {
    TokenCount snapshot = balance_view_;
    if (auto it = m.balances.find(id_); it != m.balances.end()) snapshot = it->second;
    bool grew = snapshot > balance_view_;
    balance_view_ = std::max(balance_view_, snapshot);

    if (!pending_.contains(m.bid)) return StepResult::ignore(PartyIgnore::NoPendingSale);
    if (paid_.contains(m.bid)) return StepResult::ignore(PartyIgnore::AlreadyPaid);
    if (!grew) return StepResult::ignore(PartyIgnore::NoTransfer);

    paid_.insert(m.bid);
    StepResult r;
    r.outputs.push_back(OutPaymentReceived{m.bid});
    return r;
}

StepResult Seller::deliver(const Message& m) {
    if (const auto* cert = std::get_if<MsgCert>(&m)) return handle_cert(*cert);
    if (const auto* buying = std::get_if<MsgBuying>(&m)) return handle_offer(*buying);
    if (const auto* open = std::get_if<MsgContractOpen>(&m)) return handle_open(*open);
    if (const auto* ledger = std::get_if<MsgLedgerUpdate>(&m)) return handle_ledger(*ledger);
    return StepResult::ignore(PartyIgnore::NotAddressed);
}

StepResult Buyer::make_offer(const OfferId& bid, const Criterion& b, TokenCount amount) {
    if (offers_.contains(bid)) throw DuplicateBid(bid);
    offers_.emplace(bid, b);
    amounts_.emplace(bid, amount);
    StepResult r;
    r.emissions.push_back(SendPublic{MsgBuying{bid, b}});
    return r;
}

StepResult Buyer::handle_selling(const MsgSelling& m) {
    auto offer_it = offers_.find(m.bid);
    if (offer_it == offers_.end()) return StepResult::ignore(PartyIgnore::NoSuchOffer);
    if (pending_.contains(m.bid) || complete_.contains(m.bid))
        return StepResult::ignore(PartyIgnore::AlreadyOpened);

    const VerifyKey* vk = directory_->find(m.notary_id);
    if (!vk) return StepResult::ignore(PartyIgnore::UnknownNotary);
    if (!verify(*vk, encode_cert_body({m.attrs, m.y, m.x}), m.sig))
        return StepResult::ignore(PartyIgnore::BadSignature);
    if (hash(m.cipher.canonical()) != m.y) return StepResult::ignore(PartyIgnore::YMismatch);
    if (!eval_criterion(m.attrs, offer_it->second))
        return StepResult::ignore(PartyIgnore::CriterionMismatch);

    pending_.emplace(m.bid, Pending{m.cipher, m.x});
    StepResult r;
    r.emissions.push_back(SendChain{MsgContractOpen{m.bid, m.x, amounts_.at(m.bid)}});
    return r;
}

StepResult Buyer::handle_close(const MsgContractClose& m) {
    if (complete_.contains(m.bid)) return StepResult::ignore(PartyIgnore::AlreadyComplete);
    auto it = pending_.find(m.bid);
    if (it == pending_.end()) return StepResult::ignore(PartyIgnore::NoSuchPurchase);
    if (hash(m.key.bytes) != it->second.x) return StepResult::ignore(PartyIgnore::HashMismatch);

    StepResult r;
    try {
        r.outputs.push_back(OutMessage{m.bid, decrypt(m.key, it->second.cipher)});
    } catch (const AuthenticationFailure&) {
        r.outputs.push_back(OutMessage{m.bid, std::nullopt});
    }
    complete_.insert(m.bid);
    pending_.erase(it);
    return r;
}

StepResult Buyer::deliver(const Message& m) {
    if (const auto* selling = std::get_if<MsgSelling>(&m)) return handle_selling(*selling);
    if (const auto* close = std::get_if<MsgContractClose>(&m)) return handle_close(*close);
    return StepResult::ignore(PartyIgnore::NotAddressed);
}

} // namespace fairex
