#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fairex/netsim.hpp"

namespace fairex {

// Reference semantics for the exchange: a single trusted machine that
// certifies, matches, transfers one token and hands over the goods, with
// the adversary deciding only scheduling (and the corrupted parties'
// behavior). A protocol run is correct when its projection onto this
// machine reproduces the honest parties' outputs and the final ledger.

struct InvalidEvent : std::logic_error {
    explicit InvalidEvent(const std::string& what)
        : std::logic_error("invalid ideal event: " + what) {}
};

// --- Events, in the order the adversary/environment schedules them ---

struct IdCertify { // a certificate reached this seller (already validated)
    PartyId seller;
    SessionId sid;
    Bytes data;
    AttributeSet attrs;
    bool operator==(const IdCertify&) const = default;
};
struct IdBuy { // environment input to the buyer; observable only by the
               // adversary, so it carries no state transition
    OfferId bid;
    Criterion criterion;
    bool operator==(const IdBuy&) const = default;
};
struct IdDeliverOffer { // adversary chose to deliver offer bid to recipient
    OfferId bid;
    Criterion criterion;
    PartyId recipient;
    bool operator==(const IdDeliverOffer&) const = default;
};
struct IdSell { // environment sell input; silently void unless the seller
                // holds the certificate and a matching offer
    PartyId seller;
    SessionId sid;
    OfferId bid;
    bool operator==(const IdSell&) const = default;
};
struct IdClose { // adversary settles the sale: one token, buyer to seller
    OfferId bid;
    bool operator==(const IdClose&) const = default;
};
struct IdFinish { // honest notary: the buyer receives the certified data
    OfferId bid;
    bool operator==(const IdFinish&) const = default;
};
struct IdFinishForged { // corrupted notary: the adversary picks the data
    OfferId bid;
    std::optional<Bytes> data;
    bool operator==(const IdFinishForged&) const = default;
};

using IdealEvent = std::variant<IdCertify, IdBuy, IdDeliverOffer, IdSell, IdClose,
                                IdFinish, IdFinishForged>;

std::string ideal_event_display(const IdealEvent& e);

struct IdealOutput {
    PartyId party;
    PartyOutput output;
    bool operator==(const IdealOutput&) const = default;
};

class IdealState {
public:
    explicit IdealState(const std::vector<PartyMeta>& parties);

    // Applies one event and returns the party outputs it caused. Repeating
    // an event is a no-op; Close without a sale or Finish without a prior
    // Close throws InvalidEvent.
    std::vector<IdealOutput> apply(const IdealEvent& e);

    const std::map<PartyId, std::int64_t>& balances() const { return balances_; }
    bool sale_closed(const OfferId& bid) const;

private:
    struct PartyInfo {
        Role role = Role::Buyer;
        bool corrupted = false;
    };
    struct CertInfo {
        Bytes data;
        AttributeSet attrs;
    };
    struct Sale {
        PartyId seller;
        SessionId sid;
        bool closed = false;
        bool finished = false;
    };

    std::vector<IdealOutput> finish(const OfferId& bid, const std::optional<Bytes>& forged,
                                    bool is_forged);

    std::map<PartyId, PartyInfo> parties_;
    std::map<PartyId, std::int64_t> balances_;
    std::map<std::pair<PartyId, SessionId>, CertInfo> certs_;
    std::map<std::pair<PartyId, OfferId>, Criterion> offers_;
    std::set<std::pair<PartyId, SessionId>> sids_used_;
    std::map<OfferId, Sale> sales_;
};

// --- Projection: real transcript → ideal schedule ---
//
// Every claim is recomputed from the transcript (certificate validity,
// tape membership, the H(K) = X close condition, decryptions); nothing is
// trusted from the parties' own verdicts. A transcript whose honest-party
// behavior cannot be explained by any ideal schedule is unmappable.

struct ProjectionResult {
    std::vector<IdealEvent> schedule;
    bool unmappable = false;
    std::string why;
    std::map<PartyId, TokenCount> open_escrow; // still immobilized per payer
};

ProjectionResult project_schedule(const RunTranscript& t);

struct DiffReport {
    bool equivalent = false;
    bool unmappable = false;
    std::string detail;
};

// Projects the run, replays the schedule through IdealState and compares:
// honest parties' output sequences (payment acknowledgements excluded; they
// acknowledge ledger gossip, which the ideal machine does not model) and
// final effective balances (escrow counted back to its payer).
DiffReport diff_real_ideal(const RunTranscript& t);

} // namespace fairex
