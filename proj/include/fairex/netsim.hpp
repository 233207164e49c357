#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fairex/chain.hpp"
#include "fairex/parties.hpp"
#include "fairex/rng.hpp"
#include "fairex/wire.hpp"

namespace fairex {

// The adversary owns the network: it schedules, drops, replays and (on the
// unauthenticated public channel) forges. Confidential channels leak only
// the message tag and encoded length to it.

inline constexpr const char* kChainId = "@chain";

enum class Channel : std::uint8_t { Confidential, Public };
const char* channel_name(Channel c);

enum class FlightStatus : std::uint8_t { Pending, Delivered, Dropped };
const char* flight_status_name(FlightStatus s);

struct Flight {
    std::uint64_t msg_id = 0;
    PartyId sender;
    PartyId receiver;
    Channel channel = Channel::Public;
    Message payload;
    std::size_t encoded_len = 0;
    FlightStatus status = FlightStatus::Pending;
};

// What policy code may see of a flight. Confidential payloads are absent
// from the view by construction, not by convention.
struct FlightView {
    std::uint64_t msg_id = 0;
    PartyId sender;
    PartyId receiver;
    Channel channel = Channel::Public;
    MessageTag tag = MessageTag::CertifyInput;
    std::size_t encoded_len = 0;
    const Message* payload = nullptr; // public flights only
    FlightStatus status = FlightStatus::Pending;
};

enum class Role : std::uint8_t { Notary, Seller, Buyer };
const char* role_name(Role r);

struct PartyMeta {
    PartyId id;
    Role role = Role::Buyer;
    bool corrupted = false;
    TokenCount initial_balance = 0;
    std::string verify_key_hex; // notaries only
    bool operator==(const PartyMeta&) const = default;
};

struct PolicyView {
    std::vector<FlightView> flights; // every flight so far, by msg-id
    const std::vector<TapeEvent>* tape = nullptr;
    const std::map<PartyId, TokenCount>* balances = nullptr;
    const std::vector<PartyMeta>* parties = nullptr;
    std::uint64_t step = 0;
};

// --- Adversary actions ---

struct ActDeliver {
    std::uint64_t msg_id = 0;
    std::optional<PartyId> to; // defaults to the designated receiver;
                               // confidential flights allow no redirect
    bool operator==(const ActDeliver&) const = default;
};
struct ActDrop {
    std::uint64_t msg_id = 0;
    bool operator==(const ActDrop&) const = default;
};
struct ActReplay { // re-deliver any known flight; its status is untouched
    std::uint64_t msg_id = 0;
    std::optional<PartyId> to;
    bool operator==(const ActReplay&) const = default;
};
struct ActInject { // forge a public message; the chain refuses senders it
                   // would authenticate (honest party ids)
    PartyId claimed_sender;
    PartyId to;
    Message payload;
    bool operator==(const ActInject&) const = default;
};
struct ActNoOp {
    bool operator==(const ActNoOp&) const = default;
};

using Action = std::variant<ActDeliver, ActDrop, ActReplay, ActInject, ActNoOp>;

// A forbidden action is a bug in the policy or scenario, never a protocol
// property; it aborts the run.
struct PolicyViolation : std::logic_error {
    explicit PolicyViolation(const std::string& what)
        : std::logic_error("policy violation: " + what) {}
};

class AdversaryPolicy {
public:
    virtual ~AdversaryPolicy() = default;
    virtual Action on_step(const PolicyView& view, Rng& rng) = 0;
};

// --- Corruption (static Byzantine, fixed before the run) ---

enum class NotaryMisbehavior : std::uint8_t {
    ConsistentFalse, // certify substitute data; internally consistent
    BadY,            // signed Y does not commit to C
    BadX,            // signed X does not commit to K
    BadSig,          // signature broken outright
    WrongM,          // stated plaintext differs from what C holds
};

struct CorruptNotarySpec {
    NotaryMisbehavior kind = NotaryMisbehavior::ConsistentFalse;
    Bytes false_data; // substitute plaintext where the behavior needs one
};

struct CorruptSellerSpec {
    std::uint32_t wrong_keys = 0; // closes with random keys before the real one
    bool then_correct = true;
};

// --- Scenario-independent run setup ---

struct PartySetup {
    PartyId id;
    Role role = Role::Buyer;
    std::int64_t balance = 0;
    std::optional<CorruptNotarySpec> corrupt_notary;
    std::optional<CorruptSellerSpec> corrupt_seller;
};

struct EnvCertify { // sid.notary_id names the certifying notary
    SessionId sid;
    PartyId seller;
    Bytes data;
    AttributeSet attrs;
    std::uint64_t at_step = 0;
};
struct EnvBuy { // bid.buyer_id names the publishing buyer
    OfferId bid;
    Criterion criterion;
    TokenCount amount = 1;
    std::uint64_t at_step = 0;
};
struct EnvSell { // fires at at_step, or once cert and offer reached the seller
    PartyId seller;
    SessionId sid;
    OfferId bid;
    std::optional<std::uint64_t> at_step;
};

struct Setup {
    std::uint64_t seed = 0;
    std::uint64_t step_budget = 100000;
    std::vector<PartySetup> parties;
    std::vector<EnvCertify> certifies;
    std::vector<EnvBuy> buys;
    std::vector<EnvSell> sells;
    std::string policy_name;
    std::map<std::string, std::string> policy_params;
    bool break_close_check = false; // test-only: run against a chain that
                                    // skips the H(K) == X gate
};

// --- Transcript records (in-memory; serialization lives in the harness) ---

struct RecCertify {
    std::uint64_t step = 0;
    MsgCertifyInput input;
    bool operator==(const RecCertify&) const = default;
};
struct RecBuy {
    std::uint64_t step = 0;
    MsgBuying offer;
    TokenCount amount = 0;
    bool operator==(const RecBuy&) const = default;
};
struct RecSell {
    std::uint64_t step = 0;
    PartyId seller;
    SessionId sid;
    OfferId bid;
    bool accepted = false;
    std::string reason;
    bool operator==(const RecSell&) const = default;
};
struct RecEnqueue { // payload present for public flights only: the record
                    // mirrors exactly what the adversary could see
    std::uint64_t step = 0;
    std::uint64_t msg_id = 0;
    PartyId sender;
    PartyId receiver;
    Channel channel = Channel::Public;
    MessageTag tag = MessageTag::CertifyInput;
    std::size_t encoded_len = 0;
    std::optional<Message> payload;
    bool operator==(const RecEnqueue&) const = default;
};
struct RecAction {
    std::uint64_t step = 0;
    std::string kind; // deliver | drop | replay | inject | noop
    std::optional<std::uint64_t> msg_id;
    std::optional<PartyId> to;
    std::optional<PartyId> claimed_sender;
    std::optional<Message> payload;
    bool operator==(const RecAction&) const = default;
};
struct RecDeliver {
    std::uint64_t step = 0;
    std::optional<std::uint64_t> msg_id; // absent for injected messages
    PartyId sender;
    PartyId to;
    Message payload;
    bool accepted = false;
    std::string reason;
    bool replay = false;
    bool operator==(const RecDeliver&) const = default;
};
struct RecChainSubmit {
    std::uint64_t step = 0;
    PartyId sender;
    Message payload;
    bool applied = false;
    std::string reason;
    std::uint64_t tape_first = 0; // new tape events [tape_first, +tape_count)
    std::uint64_t tape_count = 0;
    std::map<PartyId, TokenCount> balances; // post-submission snapshot
    TokenCount immobilized = 0;
    bool operator==(const RecChainSubmit&) const = default;
};
struct RecOutput {
    std::uint64_t step = 0;
    PartyId party;
    PartyOutput output;
    bool operator==(const RecOutput&) const = default;
};

using RunRecord = std::variant<RecCertify, RecBuy, RecSell, RecEnqueue, RecAction,
                               RecDeliver, RecChainSubmit, RecOutput>;

enum class Outcome : std::uint8_t { Settled, NoProgress, StuckEscrow, BudgetExceeded };
const char* outcome_name(Outcome o);

struct RunTranscript {
    std::uint64_t seed = 0;
    std::uint64_t step_budget = 0;
    std::string policy_name;
    std::map<std::string, std::string> policy_params;
    std::vector<PartyMeta> parties;
    std::vector<RunRecord> records;
    Outcome outcome = Outcome::NoProgress;
    std::map<PartyId, TokenCount> final_balances;
    TokenCount final_immobilized = 0;
    std::uint64_t steps = 0;
};

// One deterministic run: all state advances through step(), and the whole
// run is a pure function of (setup, policy behavior, seed).
class Engine {
public:
    Engine(const Setup& setup, AdversaryPolicy& policy);

    // One simulator step: due environment inputs fire, then the policy acts
    // once. Returns false when the run has terminated.
    bool step();

    // Drives to completion and finalizes the transcript.
    RunTranscript run();

    const Chain& chain() const { return chain_; }
    const std::vector<Flight>& all_flights() const { return flights_; }
    const RunTranscript& transcript() const { return out_; }
    std::uint64_t current_step() const { return step_; }
    bool finished() const { return finished_; }

    const Seller* seller(const PartyId& id) const;
    const Buyer* buyer(const PartyId& id) const;

private:
    struct Rec {
        Role role = Role::Buyer;
        std::unique_ptr<PartyMachine> machine;
        Notary* notary = nullptr;
        Seller* seller = nullptr;
        Buyer* buyer = nullptr;
        bool corrupted = false;
    };

    void fire_env_inputs();
    bool env_inputs_remaining() const;
    bool sell_ready(const EnvSell& s) const;
    std::size_t pending_count() const;
    void route(const PartyId& sender, StepResult&& r);
    std::uint64_t enqueue(const PartyId& sender, const PartyId& receiver, Channel channel,
                          Message payload);
    void deliver_to_party(const PartyId& target, const PartyId& sender, const Message& payload,
                          std::optional<std::uint64_t> msg_id, bool replay);
    void submit_chain(const PartyId& sender, const Message& payload);
    PolicyView view() const;
    void apply(const Action& a);
    void finalize(Outcome outcome);
    bool honest_party(const PartyId& id) const;

    Setup setup_;
    AdversaryPolicy& policy_;
    Rng rng_;        // protocol randomness (keys, nonces)
    Rng policy_rng_; // adversary randomness, forked so policies never
                     // perturb protocol key material
    Chain chain_{Chain::init({})};
    KeyDirectory dir_;
    std::vector<PartyId> order_;
    std::map<PartyId, Rec> parties_;
    std::vector<Flight> flights_;
    std::vector<bool> fired_certify_, fired_buy_, fired_sell_;
    std::set<std::pair<PartyId, SessionId>> delivered_certs_;
    std::set<std::pair<PartyId, OfferId>> delivered_offers_;
    std::uint64_t step_ = 0;
    bool finished_ = false;
    RunTranscript out_;
};

} // namespace fairex
