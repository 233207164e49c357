#include "fairex/corrupt.hpp"

namespace fairex {

StepResult CorruptNotary::certify(const SessionId& sid, const PartyId& seller_id,
                                  const Bytes& data, const AttributeSet& attrs, Rng& rng) {
    claim_sid(sid);

    MsgCert cert = [&] {
        switch (spec_.kind) {
            case NotaryMisbehavior::ConsistentFalse:
                // a fully coherent certificate for data the environment
                // never supplied; undetectable by the step-2 clauses
                return build_cert(signing_key(), sid, spec_.false_data, attrs, rng);
            case NotaryMisbehavior::WrongM: {
                MsgCert m = build_cert(signing_key(), sid, data, attrs, rng);
                m.data = spec_.false_data;
                return m;
            }
            case NotaryMisbehavior::BadY: {
                MsgCert m = build_cert(signing_key(), sid, data, attrs, rng);
                m.y.bytes[0] ^= 0x01;
                m.sig = sign(signing_key(), encode_cert_body({m.attrs, m.y, m.x}));
                return m;
            }
            case NotaryMisbehavior::BadX: {
                MsgCert m = build_cert(signing_key(), sid, data, attrs, rng);
                m.x.bytes[0] ^= 0x01;
                m.sig = sign(signing_key(), encode_cert_body({m.attrs, m.y, m.x}));
                return m;
            }
            case NotaryMisbehavior::BadSig: {
                MsgCert m = build_cert(signing_key(), sid, data, attrs, rng);
                m.sig.bytes[0] ^= 0x01;
                return m;
            }
        }
        return build_cert(signing_key(), sid, data, attrs, rng);
    }();

    StepResult r;
    r.emissions.push_back(SendConfidential{seller_id, std::move(cert)});
    return r;
}

StepResult CorruptSeller::deliver(const Message& m) {
    const auto* open = std::get_if<MsgContractOpen>(&m);
    if (!open) return Seller::deliver(m);

    if (!pending_sales().contains(open->bid))
        return StepResult::ignore(PartyIgnore::NoPendingSale);
    if (burst_done_.contains(open->bid))
        return StepResult::ignore(PartyIgnore::AlreadyClosed);
    burst_done_.insert(open->bid);

    const SessionId& sid = pending_sales().at(open->bid);
    StepResult r;
    for (std::uint32_t i = 0; i < spec_.wrong_keys; ++i)
        r.emissions.push_back(SendChain{MsgContractClose{open->bid, gen_key(rng_)}});
    if (spec_.then_correct)
        r.emissions.push_back(SendChain{MsgContractClose{open->bid, certificates().at(sid).key}});
    return r;
}

} // namespace fairex
