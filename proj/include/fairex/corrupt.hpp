#pragma once

#include <set>

#include "fairex/netsim.hpp"
#include "fairex/parties.hpp"

namespace fairex {

// Byzantine replacements, fixed before the run starts. Each keeps the
// honest machine's interface so the simulator drives it unchanged.

// Issues certificates with one deliberately wrong field. Everything not
// named by the misbehavior stays honest, so exactly one validation clause
// trips at the seller (or none, for the consistent-false variant).
class CorruptNotary : public Notary {
public:
    CorruptNotary(PartyId id, SigKeyPair keys, CorruptNotarySpec spec)
        : Notary(std::move(id), std::move(keys)), spec_(std::move(spec)) {}

    StepResult certify(const SessionId& sid, const PartyId& seller_id, const Bytes& data,
                       const AttributeSet& attrs, Rng& rng) override;

private:
    CorruptNotarySpec spec_;
};

// Plays the honest seller except at contract close, where it first floods
// the chain with random wrong keys before (optionally) the real one.
class CorruptSeller : public Seller {
public:
    CorruptSeller(PartyId id, const KeyDirectory* directory, TokenCount initial_balance,
                  CorruptSellerSpec spec, Rng rng)
        : Seller(std::move(id), directory, initial_balance),
          spec_(spec),
          rng_(std::move(rng)) {}

    StepResult deliver(const Message& m) override;

private:
    CorruptSellerSpec spec_;
    Rng rng_;
    std::set<OfferId> burst_done_;
};

} // namespace fairex
