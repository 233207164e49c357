#include "fairex/ideal.hpp"

#include <algorithm>

namespace fairex {

std::string ideal_event_display(const IdealEvent& e) {
    if (const auto* c = std::get_if<IdCertify>(&e))
        return "Certify(" + c->sid.display() + " -> " + c->seller + ")";
    if (const auto* b = std::get_if<IdBuy>(&e)) return "Buy(" + b->bid.display() + ")";
    if (const auto* d = std::get_if<IdDeliverOffer>(&e))
        return "DeliverOffer(" + d->bid.display() + " -> " + d->recipient + ")";
    if (const auto* s = std::get_if<IdSell>(&e))
        return "Sell(" + s->seller + ", " + s->sid.display() + ", " + s->bid.display() + ")";
    if (const auto* cl = std::get_if<IdClose>(&e)) return "Close(" + cl->bid.display() + ")";
    if (const auto* f = std::get_if<IdFinish>(&e)) return "Finish(" + f->bid.display() + ")";
    const auto& ff = std::get<IdFinishForged>(e);
    return "FinishForged(" + ff.bid.display() + ", " +
           (ff.data ? hex_encode(ByteSpan(ff.data->data(), ff.data->size())) : "bot") + ")";
}

IdealState::IdealState(const std::vector<PartyMeta>& parties) {
    for (const PartyMeta& p : parties) {
        parties_[p.id] = {p.role, p.corrupted};
        balances_[p.id] = static_cast<std::int64_t>(p.initial_balance);
    }
}

bool IdealState::sale_closed(const OfferId& bid) const {
    auto it = sales_.find(bid);
    return it != sales_.end() && it->second.closed;
}

std::vector<IdealOutput> IdealState::apply(const IdealEvent& e) {
    std::vector<IdealOutput> out;
    if (const auto* c = std::get_if<IdCertify>(&e)) {
        auto pit = parties_.find(c->seller);
        if (pit == parties_.end() || pit->second.role != Role::Seller) return out;
        auto key = std::pair{c->seller, c->sid};
        if (certs_.contains(key)) return out;
        certs_.emplace(key, CertInfo{c->data, c->attrs});
        if (!pit->second.corrupted) out.push_back({c->seller, OutCertReceived{c->sid}});
    } else if (std::holds_alternative<IdBuy>(e)) {
        // forwarded to the adversary; nothing stored, offers may be forged
    } else if (const auto* d = std::get_if<IdDeliverOffer>(&e)) {
        auto pit = parties_.find(d->recipient);
        if (pit == parties_.end() || pit->second.role != Role::Seller) return out;
        auto key = std::pair{d->recipient, d->bid};
        if (offers_.contains(key)) return out;
        offers_.emplace(key, d->criterion);
        if (!pit->second.corrupted) out.push_back({d->recipient, OutOfferReceived{d->bid}});
    } else if (const auto* s = std::get_if<IdSell>(&e)) {
        if (sales_.contains(s->bid)) return out;
        if (sids_used_.contains({s->seller, s->sid})) return out;
        auto cit = certs_.find({s->seller, s->sid});
        auto oit = offers_.find({s->seller, s->bid});
        if (cit == certs_.end() || oit == offers_.end()) return out;
        if (!eval_criterion(cit->second.attrs, oit->second)) return out;
        sales_.emplace(s->bid, Sale{s->seller, s->sid});
        sids_used_.insert({s->seller, s->sid});
    } else if (const auto* cl = std::get_if<IdClose>(&e)) {
        auto it = sales_.find(cl->bid);
        if (it == sales_.end()) throw InvalidEvent("close without a sale: " + cl->bid.display());
        if (it->second.closed) return out;
        it->second.closed = true;
        balances_[cl->bid.buyer_id] -= 1;
        balances_[it->second.seller] += 1;
    } else if (const auto* f = std::get_if<IdFinish>(&e)) {
        out = finish(f->bid, std::nullopt, false);
    } else {
        const auto& ff = std::get<IdFinishForged>(e);
        out = finish(ff.bid, ff.data, true);
    }
    return out;
}

std::vector<IdealOutput> IdealState::finish(const OfferId& bid, const std::optional<Bytes>& forged,
                                            bool is_forged) {
    auto it = sales_.find(bid);
    if (it == sales_.end()) throw InvalidEvent("finish without a sale: " + bid.display());
    if (!it->second.closed) throw InvalidEvent("finish before close: " + bid.display());
    std::vector<IdealOutput> out;
    if (it->second.finished) return out;
    it->second.finished = true;

    auto pit = parties_.find(bid.buyer_id);
    if (pit == parties_.end() || pit->second.corrupted) return out;
    if (is_forged) {
        out.push_back({bid.buyer_id, OutMessage{bid, forged}});
    } else {
        const CertInfo& cert = certs_.at({it->second.seller, it->second.sid});
        out.push_back({bid.buyer_id, OutMessage{bid, cert.data}});
    }
    return out;
}

namespace {

bool cert_valid(const MsgCert& c, const VerifyKey* vk) {
    if (!vk) return false;
    if (!verify(*vk, encode_cert_body({c.attrs, c.y, c.x}), c.sig)) return false;
    if (hash(c.cipher.canonical()) != c.y) return false;
    if (hash(c.key.bytes) != c.x) return false;
    try {
        if (decrypt(c.key, c.cipher) != c.data) return false;
    } catch (const AuthenticationFailure&) {
        return false;
    }
    return true;
}

struct OpenInfo {
    Digest condition;
    TokenCount amount = 0;
    PartyId payer;
    bool closed = false;
};

} // namespace

ProjectionResult project_schedule(const RunTranscript& t) {
    ProjectionResult res;
    auto fail = [&](const std::string& why) {
        res.unmappable = true;
        res.why = why;
        return res;
    };

    std::map<PartyId, const PartyMeta*> meta;
    std::map<PartyId, VerifyKey> vks;
    for (const PartyMeta& p : t.parties) {
        meta[p.id] = &p;
        if (p.role == Role::Notary && !p.verify_key_hex.empty()) {
            Bytes raw = hex_decode(p.verify_key_hex);
            if (raw.size() == kVerifyKeyLen)
                vks[p.id] = VerifyKey::from_bytes(ByteSpan(raw.data(), raw.size()));
        }
    }
    auto role_of = [&](const PartyId& id, Role r) {
        auto it = meta.find(id);
        return it != meta.end() && it->second->role == r;
    };
    auto corrupted = [&](const PartyId& id) {
        auto it = meta.find(id);
        return it != meta.end() && it->second->corrupted;
    };

    std::set<std::pair<PartyId, SessionId>> cert_seen;
    std::set<std::pair<PartyId, OfferId>> offer_seen;
    std::map<Digest, std::pair<PartyId, SessionId>> cert_by_x;
    std::map<OfferId, OpenInfo> opens;
    std::map<OfferId, SymKey> tape_closes;
    std::map<std::pair<PartyId, OfferId>, std::pair<Ciphertext, PartyId>> accepted_sellings;
    std::set<OfferId> sell_inferred, close_emitted, finish_emitted;

    for (const RunRecord& rec : t.records) {
        if (const auto* b = std::get_if<RecBuy>(&rec)) {
            res.schedule.push_back(IdBuy{b->offer.bid, b->offer.criterion});
        } else if (const auto* s = std::get_if<RecSell>(&rec)) {
            if (!corrupted(s->seller))
                res.schedule.push_back(IdSell{s->seller, s->sid, s->bid});
        } else if (const auto* d = std::get_if<RecDeliver>(&rec)) {
            if (const auto* cert = std::get_if<MsgCert>(&d->payload)) {
                if (!role_of(d->to, Role::Seller)) continue;
                if (!cert_seen.insert({d->to, cert->sid}).second) continue;
                auto vkit = vks.find(cert->sid.notary_id);
                if (!cert_valid(*cert, vkit == vks.end() ? nullptr : &vkit->second)) continue;
                res.schedule.push_back(IdCertify{d->to, cert->sid, cert->data, cert->attrs});
                cert_by_x[cert->x] = {d->to, cert->sid};
            } else if (const auto* buying = std::get_if<MsgBuying>(&d->payload)) {
                if (!offer_seen.insert({d->to, buying->bid}).second) continue;
                res.schedule.push_back(IdDeliverOffer{buying->bid, buying->criterion, d->to});
            } else if (const auto* selling = std::get_if<MsgSelling>(&d->payload)) {
                if (!role_of(d->to, Role::Buyer) || !d->accepted) continue;
                accepted_sellings[{d->to, selling->bid}] = {selling->cipher, selling->notary_id};
                if (corrupted(d->sender) && role_of(d->sender, Role::Seller) &&
                    !sell_inferred.contains(selling->bid)) {
                    auto cit = cert_by_x.find(selling->x);
                    if (cit == cert_by_x.end())
                        return fail("a buyer accepted a selling backed by no certificate");
                    sell_inferred.insert(selling->bid);
                    res.schedule.push_back(
                        IdSell{cit->second.first, cit->second.second, selling->bid});
                }
            } else if (const auto* close = std::get_if<MsgContractClose>(&d->payload)) {
                if (!role_of(d->to, Role::Buyer) || !d->accepted) continue;
                auto tit = tape_closes.find(close->bid);
                if (tit == tape_closes.end() || !(tit->second == close->key))
                    return fail("a buyer accepted a contract close that is not on the tape");
                if (!finish_emitted.insert(close->bid).second) continue;
                auto sit = accepted_sellings.find({d->to, close->bid});
                if (sit == accepted_sellings.end())
                    return fail("a buyer accepted a close without any prior selling");
                if (corrupted(sit->second.second)) {
                    std::optional<Bytes> forged;
                    try {
                        forged = decrypt(close->key, sit->second.first);
                    } catch (const AuthenticationFailure&) {
                        forged = std::nullopt;
                    }
                    res.schedule.push_back(IdFinishForged{close->bid, std::move(forged)});
                } else {
                    res.schedule.push_back(IdFinish{close->bid});
                }
            }
        } else if (const auto* cs = std::get_if<RecChainSubmit>(&rec)) {
            if (!cs->applied) continue;
            if (const auto* open = std::get_if<MsgContractOpen>(&cs->payload)) {
                opens[open->bid] = {open->condition, open->amount, cs->sender, false};
            } else if (const auto* close = std::get_if<MsgContractClose>(&cs->payload)) {
                auto oit = opens.find(close->bid);
                if (oit == opens.end())
                    return fail("the chain closed a contract that was never opened");
                oit->second.closed = true;
                tape_closes[close->bid] = close->key;
                // a close the chain applied against H(K) != X is the chain
                // misbehaving; the ideal transfer never happens
                if (hash(close->key.bytes) == oit->second.condition &&
                    close_emitted.insert(close->bid).second)
                    res.schedule.push_back(IdClose{close->bid});
            }
        }
    }

    for (const auto& [bid, info] : opens)
        if (!info.closed) res.open_escrow[info.payer] += info.amount;
    return res;
}

DiffReport diff_real_ideal(const RunTranscript& t) {
    ProjectionResult proj = project_schedule(t);
    if (proj.unmappable) return {false, true, proj.why};

    IdealState st(t.parties);
    std::vector<IdealOutput> ideal_outputs;
    try {
        for (const IdealEvent& e : proj.schedule)
            for (IdealOutput& o : st.apply(e)) ideal_outputs.push_back(std::move(o));
    } catch (const InvalidEvent& ex) {
        return {false, true, ex.what()};
    }

    std::map<PartyId, const PartyMeta*> meta;
    for (const PartyMeta& p : t.parties) meta[p.id] = &p;

    std::map<PartyId, std::vector<PartyOutput>> real, ideal;
    for (const RunRecord& rec : t.records) {
        const auto* o = std::get_if<RecOutput>(&rec);
        if (!o) continue;
        auto mit = meta.find(o->party);
        if (mit == meta.end() || mit->second->corrupted) continue;
        if (std::holds_alternative<OutPaymentReceived>(o->output)) continue;
        real[o->party].push_back(o->output);
    }
    for (const IdealOutput& o : ideal_outputs) {
        auto mit = meta.find(o.party);
        if (mit == meta.end() || mit->second->corrupted) continue;
        ideal[o.party].push_back(o.output);
    }

    for (const PartyMeta& p : t.parties) {
        const auto& rv = real[p.id];
        const auto& iv = ideal[p.id];
        std::size_t n = std::max(rv.size(), iv.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (i < rv.size() && i < iv.size() && rv[i] == iv[i]) continue;
            std::string rs = i < rv.size() ? output_display(rv[i]) : "<none>";
            std::string is = i < iv.size() ? output_display(iv[i]) : "<none>";
            return {false, false,
                    "output divergence for " + p.id + " at #" + std::to_string(i) +
                        ": real " + rs + ", ideal " + is};
        }
    }

    std::map<PartyId, std::int64_t> real_eff;
    for (const auto& [id, bal] : t.final_balances) real_eff[id] = static_cast<std::int64_t>(bal);
    for (const auto& [id, escrow] : proj.open_escrow)
        real_eff[id] += static_cast<std::int64_t>(escrow);

    std::set<PartyId> ids;
    for (const auto& [id, bal] : real_eff) ids.insert(id);
    for (const auto& [id, bal] : st.balances()) ids.insert(id);
    for (const PartyId& id : ids) {
        auto rit = real_eff.find(id);
        auto iit = st.balances().find(id);
        std::int64_t r = rit == real_eff.end() ? 0 : rit->second;
        std::int64_t i = iit == st.balances().end() ? 0 : iit->second;
        if (r != i)
            return {false, false,
                    "balance divergence for " + id + ": real effective " + std::to_string(r) +
                        ", ideal " + std::to_string(i)};
    }

    return {true, false, "equivalent"};
}

} // namespace fairex
