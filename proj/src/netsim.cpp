#include "fairex/netsim.hpp"

#include <algorithm>

#include "fairex/corrupt.hpp"

namespace fairex {

const char* channel_name(Channel c) {
    return c == Channel::Confidential ? "confidential" : "public";
}

const char* flight_status_name(FlightStatus s) {
    switch (s) {
        case FlightStatus::Pending: return "pending";
        case FlightStatus::Delivered: return "delivered";
        case FlightStatus::Dropped: return "dropped";
    }
    return "unknown";
}

const char* role_name(Role r) {
    switch (r) {
        case Role::Notary: return "notary";
        case Role::Seller: return "seller";
        case Role::Buyer: return "buyer";
    }
    return "unknown";
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Settled: return "settled";
        case Outcome::NoProgress: return "no-progress";
        case Outcome::StuckEscrow: return "stuck-escrow";
        case Outcome::BudgetExceeded: return "budget-exceeded";
    }
    return "unknown";
}

Engine::Engine(const Setup& setup, AdversaryPolicy& policy)
    : setup_(setup), policy_(policy), rng_(setup.seed), policy_rng_(rng_.fork()) {
    std::map<PartyId, std::int64_t> balances;
    for (const PartySetup& ps : setup_.parties) {
        if (ps.id.empty() || ps.id == kChainId)
            throw std::invalid_argument("reserved or empty party id");
        if (parties_.contains(ps.id))
            throw std::invalid_argument("duplicate party id: " + ps.id);

        Rec rec;
        rec.role = ps.role;
        PartyMeta meta;
        meta.id = ps.id;
        meta.role = ps.role;
        meta.initial_balance = ps.balance < 0 ? 0 : static_cast<TokenCount>(ps.balance);

        switch (ps.role) {
            case Role::Notary: {
                SigKeyPair kp = gen_sig_keypair(rng_);
                dir_.put(ps.id, kp.verify_key);
                meta.verify_key_hex = hex_encode(kp.verify_key.bytes);
                if (ps.corrupt_notary) {
                    auto p = std::make_unique<CorruptNotary>(ps.id, kp, *ps.corrupt_notary);
                    rec.notary = p.get();
                    rec.machine = std::move(p);
                    rec.corrupted = true;
                } else {
                    auto p = std::make_unique<Notary>(ps.id, kp);
                    rec.notary = p.get();
                    rec.machine = std::move(p);
                }
                break;
            }
            case Role::Seller: {
                TokenCount bal = meta.initial_balance;
                if (ps.corrupt_seller) {
                    auto p = std::make_unique<CorruptSeller>(ps.id, &dir_, bal, *ps.corrupt_seller,
                                                             rng_.fork());
                    rec.seller = p.get();
                    rec.machine = std::move(p);
                    rec.corrupted = true;
                } else {
                    auto p = std::make_unique<Seller>(ps.id, &dir_, bal);
                    rec.seller = p.get();
                    rec.machine = std::move(p);
                }
                break;
            }
            case Role::Buyer: {
                auto p = std::make_unique<Buyer>(ps.id, &dir_);
                rec.buyer = p.get();
                rec.machine = std::move(p);
                break;
            }
        }
        meta.corrupted = rec.corrupted;
        balances[ps.id] = ps.balance;
        order_.push_back(ps.id);
        parties_.emplace(ps.id, std::move(rec));
        out_.parties.push_back(std::move(meta));
    }
    chain_ = Chain::init(balances);
    chain_.set_skip_close_hash_check(setup_.break_close_check);

    for (const EnvCertify& c : setup_.certifies) {
        auto it = parties_.find(c.sid.notary_id);
        if (it == parties_.end() || it->second.role != Role::Notary)
            throw std::invalid_argument("certify names no notary: " + c.sid.notary_id);
        auto st = parties_.find(c.seller);
        if (st == parties_.end() || st->second.role != Role::Seller)
            throw std::invalid_argument("certify names no seller: " + c.seller);
    }
    for (const EnvBuy& b : setup_.buys) {
        auto it = parties_.find(b.bid.buyer_id);
        if (it == parties_.end() || it->second.role != Role::Buyer)
            throw std::invalid_argument("buy names no buyer: " + b.bid.buyer_id);
    }
    for (const EnvSell& s : setup_.sells) {
        auto it = parties_.find(s.seller);
        if (it == parties_.end() || it->second.role != Role::Seller)
            throw std::invalid_argument("sell names no seller: " + s.seller);
    }

    fired_certify_.assign(setup_.certifies.size(), false);
    fired_buy_.assign(setup_.buys.size(), false);
    fired_sell_.assign(setup_.sells.size(), false);

    out_.seed = setup_.seed;
    out_.step_budget = setup_.step_budget;
    out_.policy_name = setup_.policy_name;
    out_.policy_params = setup_.policy_params;
}

const Seller* Engine::seller(const PartyId& id) const {
    auto it = parties_.find(id);
    return it == parties_.end() ? nullptr : it->second.seller;
}

const Buyer* Engine::buyer(const PartyId& id) const {
    auto it = parties_.find(id);
    return it == parties_.end() ? nullptr : it->second.buyer;
}

bool Engine::honest_party(const PartyId& id) const {
    auto it = parties_.find(id);
    return it != parties_.end() && !it->second.corrupted;
}

std::size_t Engine::pending_count() const {
    return static_cast<std::size_t>(
        std::count_if(flights_.begin(), flights_.end(),
                      [](const Flight& f) { return f.status == FlightStatus::Pending; }));
}

bool Engine::sell_ready(const EnvSell& s) const {
    return delivered_certs_.contains({s.seller, s.sid}) &&
           delivered_offers_.contains({s.seller, s.bid});
}

bool Engine::env_inputs_remaining() const {
    for (std::size_t i = 0; i < setup_.certifies.size(); ++i)
        if (!fired_certify_[i]) return true;
    for (std::size_t i = 0; i < setup_.buys.size(); ++i)
        if (!fired_buy_[i]) return true;
    for (std::size_t i = 0; i < setup_.sells.size(); ++i) {
        if (fired_sell_[i]) continue;
        // a reactive sell whose preconditions never arrive must not hold
        // the run open forever
        if (setup_.sells[i].at_step || sell_ready(setup_.sells[i])) return true;
    }
    return false;
}

void Engine::fire_env_inputs() {
    for (std::size_t i = 0; i < setup_.certifies.size(); ++i) {
        const EnvCertify& c = setup_.certifies[i];
        if (fired_certify_[i] || c.at_step > step_) continue;
        fired_certify_[i] = true;
        out_.records.push_back(RecCertify{step_, MsgCertifyInput{c.sid, c.seller, c.data, c.attrs}});
        route(c.sid.notary_id,
              parties_.at(c.sid.notary_id).notary->certify(c.sid, c.seller, c.data, c.attrs, rng_));
    }
    for (std::size_t i = 0; i < setup_.buys.size(); ++i) {
        const EnvBuy& b = setup_.buys[i];
        if (fired_buy_[i] || b.at_step > step_) continue;
        fired_buy_[i] = true;
        out_.records.push_back(RecBuy{step_, MsgBuying{b.bid, b.criterion}, b.amount});
        route(b.bid.buyer_id,
              parties_.at(b.bid.buyer_id).buyer->make_offer(b.bid, b.criterion, b.amount));
    }
    for (std::size_t i = 0; i < setup_.sells.size(); ++i) {
        const EnvSell& s = setup_.sells[i];
        if (fired_sell_[i]) continue;
        bool due = s.at_step ? (*s.at_step <= step_) : sell_ready(s);
        if (!due) continue;
        fired_sell_[i] = true;
        StepResult r = parties_.at(s.seller).seller->sell(s.sid, s.bid);
        out_.records.push_back(
            RecSell{step_, s.seller, s.sid, s.bid, r.accepted, party_ignore_name(r.reason)});
        route(s.seller, std::move(r));
    }
}

std::uint64_t Engine::enqueue(const PartyId& sender, const PartyId& receiver, Channel channel,
                              Message payload) {
    std::uint64_t id = flights_.size();
    std::size_t len = encode(payload).size();
    out_.records.push_back(RecEnqueue{
        step_, id, sender, receiver, channel, message_tag(payload), len,
        channel == Channel::Public ? std::optional<Message>(payload) : std::nullopt});
    flights_.push_back(
        Flight{id, sender, receiver, channel, std::move(payload), len, FlightStatus::Pending});
    return id;
}

void Engine::route(const PartyId& sender, StepResult&& r) {
    for (PartyOutput& o : r.outputs)
        out_.records.push_back(RecOutput{step_, sender, std::move(o)});
    for (Emission& e : r.emissions) {
        if (auto* sc = std::get_if<SendConfidential>(&e)) {
            enqueue(sender, sc->to, Channel::Confidential, std::move(sc->payload));
        } else if (auto* sp = std::get_if<SendPublic>(&e)) {
            for (const PartyId& p : order_)
                if (p != sender) enqueue(sender, p, Channel::Public, sp->payload);
        } else {
            auto& chain_send = std::get<SendChain>(e);
            enqueue(sender, kChainId, Channel::Public, std::move(chain_send.payload));
        }
    }
}

void Engine::deliver_to_party(const PartyId& target, const PartyId& sender,
                              const Message& payload, std::optional<std::uint64_t> msg_id,
                              bool replay) {
    StepResult r = parties_.at(target).machine->deliver(payload);
    out_.records.push_back(RecDeliver{step_, msg_id, sender, target, payload, r.accepted,
                                      party_ignore_name(r.reason), replay});
    if (const auto* cert = std::get_if<MsgCert>(&payload))
        delivered_certs_.insert({target, cert->sid});
    if (const auto* buying = std::get_if<MsgBuying>(&payload))
        delivered_offers_.insert({target, buying->bid});
    route(target, std::move(r));
}

void Engine::submit_chain(const PartyId& sender, const Message& payload) {
    std::uint64_t before = chain_.tape_size();
    ChainResult res;
    if (const auto* open = std::get_if<MsgContractOpen>(&payload))
        res = chain_.submit_open(sender, *open);
    else if (const auto* close = std::get_if<MsgContractClose>(&payload))
        res = chain_.submit_close(sender, *close);
    else
        res = ChainResult{false, ChainIgnore::UnhandledMessage};

    std::uint64_t count = chain_.tape_size() - before;
    out_.records.push_back(RecChainSubmit{step_, sender, payload, res.applied,
                                          chain_ignore_name(res.reason), before, count,
                                          chain_.balances(), chain_.immobilized_total()});
    // the tape is broadcast; the adversary schedules who reads it when
    for (const TapeEvent& ev : chain_.read_tape(before))
        for (const PartyId& p : order_) enqueue(kChainId, p, Channel::Public, ev.payload);
}

PolicyView Engine::view() const {
    PolicyView v;
    v.flights.reserve(flights_.size());
    for (const Flight& f : flights_) {
        v.flights.push_back(FlightView{
            f.msg_id, f.sender, f.receiver, f.channel, message_tag(f.payload), f.encoded_len,
            f.channel == Channel::Public ? &f.payload : nullptr, f.status});
    }
    v.tape = &chain_.tape();
    v.balances = &chain_.balances();
    v.parties = &out_.parties;
    v.step = step_;
    return v;
}

void Engine::apply(const Action& a) {
    if (const auto* d = std::get_if<ActDeliver>(&a)) {
        if (d->msg_id >= flights_.size()) throw PolicyViolation("deliver of unknown msg-id");
        Flight& f = flights_[d->msg_id];
        if (f.status != FlightStatus::Pending)
            throw PolicyViolation("deliver of a non-pending flight");
        PartyId target = d->to.value_or(f.receiver);
        if (f.channel == Channel::Confidential && target != f.receiver)
            throw PolicyViolation("confidential flight cannot be redirected");
        if (target == kChainId && f.receiver != kChainId)
            throw PolicyViolation("cannot redirect a flight into the chain");
        if (target != kChainId && !parties_.contains(target))
            throw PolicyViolation("unknown delivery target: " + target);
        PartyId sender = f.sender;
        Message payload = f.payload;
        std::uint64_t id = f.msg_id;
        f.status = FlightStatus::Delivered; // f may dangle once handlers enqueue
        if (target == kChainId)
            submit_chain(sender, payload);
        else
            deliver_to_party(target, sender, payload, id, false);
    } else if (const auto* dr = std::get_if<ActDrop>(&a)) {
        if (dr->msg_id >= flights_.size()) throw PolicyViolation("drop of unknown msg-id");
        Flight& f = flights_[dr->msg_id];
        if (f.status != FlightStatus::Pending) throw PolicyViolation("drop of a non-pending flight");
        f.status = FlightStatus::Dropped;
    } else if (const auto* rp = std::get_if<ActReplay>(&a)) {
        if (rp->msg_id >= flights_.size()) throw PolicyViolation("replay of unknown msg-id");
        const Flight& f = flights_[rp->msg_id];
        PartyId target = rp->to.value_or(f.receiver);
        if (f.channel == Channel::Confidential && target != f.receiver)
            throw PolicyViolation("confidential flight cannot be redirected");
        if (target == kChainId && f.receiver != kChainId)
            throw PolicyViolation("cannot redirect a flight into the chain");
        if (target != kChainId && !parties_.contains(target))
            throw PolicyViolation("unknown replay target: " + target);
        PartyId sender = f.sender;
        Message payload = f.payload;
        std::uint64_t id = f.msg_id;
        if (target == kChainId)
            submit_chain(sender, payload);
        else
            deliver_to_party(target, sender, payload, id, true);
    } else if (const auto* inj = std::get_if<ActInject>(&a)) {
        if (inj->to == kChainId) {
            if (inj->claimed_sender == kChainId)
                throw PolicyViolation("the chain does not submit to itself");
            if (honest_party(inj->claimed_sender))
                throw PolicyViolation("chain submissions are sender-authenticated");
            submit_chain(inj->claimed_sender, inj->payload);
        } else {
            if (!parties_.contains(inj->to))
                throw PolicyViolation("unknown inject target: " + inj->to);
            deliver_to_party(inj->to, inj->claimed_sender, inj->payload, std::nullopt, false);
        }
    }
    // ActNoOp: nothing
}

bool Engine::step() {
    if (finished_) return false;
    if (step_ >= setup_.step_budget) {
        finalize(Outcome::BudgetExceeded);
        return false;
    }
    fire_env_inputs();

    Action a = policy_.on_step(view(), policy_rng_);
    RecAction rec;
    rec.step = step_;
    if (const auto* d = std::get_if<ActDeliver>(&a)) {
        rec.kind = "deliver";
        rec.msg_id = d->msg_id;
        rec.to = d->to;
    } else if (const auto* dr = std::get_if<ActDrop>(&a)) {
        rec.kind = "drop";
        rec.msg_id = dr->msg_id;
    } else if (const auto* rp = std::get_if<ActReplay>(&a)) {
        rec.kind = "replay";
        rec.msg_id = rp->msg_id;
        rec.to = rp->to;
    } else if (const auto* inj = std::get_if<ActInject>(&a)) {
        rec.kind = "inject";
        rec.to = inj->to;
        rec.claimed_sender = inj->claimed_sender;
        rec.payload = inj->payload;
    } else {
        rec.kind = "noop";
    }
    out_.records.push_back(std::move(rec));

    apply(a);
    ++step_;

    if (std::holds_alternative<ActNoOp>(a) && pending_count() == 0 && !env_inputs_remaining()) {
        Outcome o = Outcome::NoProgress;
        if (chain_.immobilized_total() > 0) {
            o = Outcome::StuckEscrow;
        } else {
            for (const auto& [id, c] : chain_.contracts())
                if (c.closed) o = Outcome::Settled;
        }
        finalize(o);
        return false;
    }
    return true;
}

RunTranscript Engine::run() {
    while (step()) {
    }
    return out_;
}

void Engine::finalize(Outcome outcome) {
    out_.outcome = outcome;
    out_.final_balances = chain_.balances();
    out_.final_immobilized = chain_.immobilized_total();
    out_.steps = step_;
    finished_ = true;
}

} // namespace fairex
