#include "fairex/policies.hpp"

#include <set>
#include <stdexcept>

namespace fairex {
namespace {

std::vector<std::uint64_t> pending_ids(const PolicyView& v) {
    std::vector<std::uint64_t> out;
    for (const FlightView& f : v.flights)
        if (f.status == FlightStatus::Pending) out.push_back(f.msg_id);
    return out;
}

Action deliver_oldest_or_stall(const PolicyView& v) {
    for (const FlightView& f : v.flights)
        if (f.status == FlightStatus::Pending) return ActDeliver{f.msg_id, std::nullopt};
    return ActNoOp{};
}

class EagerPolicy : public AdversaryPolicy {
public:
    Action on_step(const PolicyView& v, Rng&) override { return deliver_oldest_or_stall(v); }
};

// Stays inside the honest action surface (designated receivers only):
// redirects and forgeries are probed by dedicated policies, not by fuzz.
class RandomPolicy : public AdversaryPolicy {
public:
    Action on_step(const PolicyView& v, Rng& rng) override {
        std::vector<std::uint64_t> pending = pending_ids(v);
        if (pending.empty()) return ActNoOp{};
        std::uint64_t roll = rng.below(16);
        if (roll < 12) return ActDeliver{pending[rng.below(pending.size())], std::nullopt};
        if (roll < 13) return ActDrop{pending[rng.below(pending.size())]};
        if (roll < 15 && !v.flights.empty())
            return ActReplay{v.flights[rng.below(v.flights.size())].msg_id, std::nullopt};
        return ActNoOp{};
    }
};

class DropRatePolicy : public AdversaryPolicy {
public:
    explicit DropRatePolicy(double p) : p_(p) {}
    Action on_step(const PolicyView& v, Rng& rng) override {
        for (const FlightView& f : v.flights) {
            if (f.status != FlightStatus::Pending) continue;
            if (rng.unit() < p_) return ActDrop{f.msg_id};
            return ActDeliver{f.msg_id, std::nullopt};
        }
        return ActNoOp{};
    }

private:
    double p_;
};

class DropAllPolicy : public AdversaryPolicy {
public:
    Action on_step(const PolicyView& v, Rng&) override {
        for (const FlightView& f : v.flights)
            if (f.status == FlightStatus::Pending) return ActDrop{f.msg_id};
        return ActNoOp{};
    }
};

class DropTagPolicy : public AdversaryPolicy {
public:
    explicit DropTagPolicy(std::string tag) : tag_(std::move(tag)) {}
    Action on_step(const PolicyView& v, Rng&) override {
        for (const FlightView& f : v.flights) {
            if (f.status != FlightStatus::Pending) continue;
            if (tag_name(f.tag) == tag_) return ActDrop{f.msg_id};
            return ActDeliver{f.msg_id, std::nullopt};
        }
        return ActNoOp{};
    }

private:
    std::string tag_;
};

class ReplayHappyPolicy : public AdversaryPolicy {
public:
    Action on_step(const PolicyView& v, Rng&) override {
        for (const FlightView& f : v.flights)
            if (f.status == FlightStatus::Pending) return ActDeliver{f.msg_id, std::nullopt};
        for (const FlightView& f : v.flights) {
            if (f.status != FlightStatus::Delivered || replayed_.contains(f.msg_id)) continue;
            replayed_.insert(f.msg_id);
            return ActReplay{f.msg_id, std::nullopt};
        }
        return ActNoOp{};
    }

private:
    std::set<std::uint64_t> replayed_;
};

// Waits for a contract close headed to the chain, submits an identical
// close first under its own identity, then lets the original through. The
// chain pays whoever closes; the thief's copy wins the race.
class FrontRunnerPolicy : public AdversaryPolicy {
public:
    explicit FrontRunnerPolicy(PartyId thief) : thief_(std::move(thief)) {}
    Action on_step(const PolicyView& v, Rng&) override {
        if (!raced_) {
            for (const FlightView& f : v.flights) {
                if (f.status != FlightStatus::Pending || f.receiver != kChainId) continue;
                if (f.tag != MessageTag::ContractClose || !f.payload) continue;
                raced_ = true;
                return ActInject{thief_, kChainId, *f.payload};
            }
        }
        return deliver_oldest_or_stall(v);
    }

private:
    PartyId thief_;
    bool raced_ = false;
};

// Never lets the contract reach the chain. The buyer's open is swallowed
// and replayed to the seller as a forged tape broadcast; the seller's close
// is swallowed and replayed to the buyer the same way. Both parties finish
// their protocol, yet no escrow ever moved.
class SpoofOpenPolicy : public AdversaryPolicy {
public:
    Action on_step(const PolicyView& v, Rng&) override {
        if (open_ && !open_sent_) {
            open_sent_ = true;
            return ActInject{kChainId, seller_of(v), *open_};
        }
        if (close_ && !close_sent_) {
            close_sent_ = true;
            return ActInject{kChainId, buyer_of(v), *close_};
        }
        for (const FlightView& f : v.flights) {
            if (f.status != FlightStatus::Pending) continue;
            if (f.receiver == kChainId && f.payload) {
                if (f.tag == MessageTag::ContractOpen && !open_) {
                    open_ = *f.payload;
                    return ActDrop{f.msg_id};
                }
                if (f.tag == MessageTag::ContractClose && !close_) {
                    close_ = *f.payload;
                    return ActDrop{f.msg_id};
                }
            }
            return ActDeliver{f.msg_id, std::nullopt};
        }
        return ActNoOp{};
    }

private:
    static PartyId party_with(const PolicyView& v, Role role) {
        for (const PartyMeta& p : *v.parties)
            if (p.role == role) return p.id;
        return {};
    }
    static PartyId seller_of(const PolicyView& v) { return party_with(v, Role::Seller); }
    static PartyId buyer_of(const PolicyView& v) { return party_with(v, Role::Buyer); }

    std::optional<Message> open_, close_;
    bool open_sent_ = false, close_sent_ = false;
};

class ScriptedPolicy : public AdversaryPolicy {
public:
    explicit ScriptedPolicy(std::vector<Action> script) : script_(std::move(script)) {}
    Action on_step(const PolicyView&, Rng&) override {
        if (next_ >= script_.size()) return ActNoOp{};
        return script_[next_++];
    }

private:
    std::vector<Action> script_;
    std::size_t next_ = 0;
};

std::string require_param(const std::map<std::string, std::string>& params,
                          const std::string& key, const std::string& policy) {
    auto it = params.find(key);
    if (it == params.end())
        throw std::invalid_argument("policy " + policy + " requires param " + key);
    return it->second;
}

std::map<std::string, PolicyFactory> built_ins() {
    std::map<std::string, PolicyFactory> r;
    r["eager"] = [](const auto&) { return std::make_unique<EagerPolicy>(); };
    r["random"] = [](const auto&) { return std::make_unique<RandomPolicy>(); };
    r["drop_rate"] = [](const auto& params) {
        std::string raw = require_param(params, "p", "drop_rate");
        double p = 0;
        try {
            p = std::stod(raw);
        } catch (const std::exception&) {
            throw std::invalid_argument("drop_rate: p is not a number: " + raw);
        }
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("drop_rate: p outside [0,1]: " + raw);
        return std::make_unique<DropRatePolicy>(p);
    };
    r["drop_all"] = [](const auto&) { return std::make_unique<DropAllPolicy>(); };
    r["drop_tag"] = [](const auto& params) {
        return std::make_unique<DropTagPolicy>(require_param(params, "tag", "drop_tag"));
    };
    r["replay_happy"] = [](const auto&) { return std::make_unique<ReplayHappyPolicy>(); };
    r["front_runner"] = [](const auto& params) {
        auto it = params.find("thief");
        return std::make_unique<FrontRunnerPolicy>(it == params.end() ? PartyId("mallory")
                                                                      : PartyId(it->second));
    };
    r["spoof_open"] = [](const auto&) { return std::make_unique<SpoofOpenPolicy>(); };
    return r;
}

std::map<std::string, PolicyFactory>& registry() {
    static std::map<std::string, PolicyFactory> r = built_ins();
    return r;
}

} // namespace

std::unique_ptr<AdversaryPolicy> make_policy(const std::string& name,
                                             const std::map<std::string, std::string>& params) {
    auto it = registry().find(name);
    if (it == registry().end()) throw std::invalid_argument("unknown policy: " + name);
    return it->second(params);
}

void register_policy(const std::string& name, PolicyFactory factory) {
    registry()[name] = std::move(factory);
}

std::vector<std::string> policy_names() {
    std::vector<std::string> out;
    for (const auto& [name, factory] : registry()) out.push_back(name);
    return out;
}

std::unique_ptr<AdversaryPolicy> make_scripted_policy(std::vector<Action> script) {
    return std::make_unique<ScriptedPolicy>(std::move(script));
}

} // namespace fairex
