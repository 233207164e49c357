#include "fairex/transcript.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fairex {
namespace {

using nlohmann::json;

json j_bytes(const Bytes& b) { return hex_encode(ByteSpan(b.data(), b.size())); }

Bytes p_bytes(const json& j) { return hex_decode(j.get<std::string>()); }

template <std::size_t N>
json j_array(const std::array<std::uint8_t, N>& a) {
    return hex_encode(a);
}

template <std::size_t N>
std::array<std::uint8_t, N> p_array(const json& j) {
    Bytes raw = hex_decode(j.get<std::string>());
    if (raw.size() != N)
        throw TranscriptError("field of " + std::to_string(raw.size()) + " octets, want " +
                              std::to_string(N));
    std::array<std::uint8_t, N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

json j_sid(const SessionId& s) { return {{"notary", s.notary_id}, {"suffix", j_array(s.suffix)}}; }
SessionId p_sid(const json& j) {
    return {j.at("notary").get<std::string>(), p_array<8>(j.at("suffix"))};
}

json j_bid(const OfferId& b) { return {{"buyer", b.buyer_id}, {"suffix", j_array(b.suffix)}}; }
OfferId p_bid(const json& j) {
    return {j.at("buyer").get<std::string>(), p_array<8>(j.at("suffix"))};
}

json j_attr_value(const AttrValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return {{"t", "int"}, {"v", *i}};
    if (const auto* s = std::get_if<std::string>(&v)) return {{"t", "str"}, {"v", *s}};
    return {{"t", "bool"}, {"v", std::get<bool>(v)}};
}

AttrValue p_attr_value(const json& j) {
    std::string t = j.at("t").get<std::string>();
    if (t == "int") return j.at("v").get<std::int64_t>();
    if (t == "str") return j.at("v").get<std::string>();
    if (t == "bool") return j.at("v").get<bool>();
    throw TranscriptError("unknown attribute value type: " + t);
}

json j_attrs(const AttributeSet& s) {
    json out = json::object();
    for (const auto& [name, value] : s.entries) out[name] = j_attr_value(value);
    return out;
}

AttributeSet p_attrs(const json& j) {
    AttributeSet out;
    for (const auto& [name, value] : j.items()) out.entries[name] = p_attr_value(value);
    return out;
}

json j_criterion(const Criterion& c) {
    json atoms = json::array();
    for (const Atom& a : c.atoms) {
        if (const auto* eq = std::get_if<AtomEquals>(&a)) {
            atoms.push_back({{"kind", "equals"}, {"name", eq->name}, {"value", j_attr_value(eq->value)}});
        } else if (const auto* rg = std::get_if<AtomInRange>(&a)) {
            atoms.push_back({{"kind", "range"}, {"name", rg->name}, {"lo", rg->lo}, {"hi", rg->hi}});
        } else {
            const auto& mb = std::get<AtomMemberOf>(a);
            json values = json::array();
            for (const AttrValue& v : mb.values) values.push_back(j_attr_value(v));
            atoms.push_back({{"kind", "member"}, {"name", mb.name}, {"values", values}});
        }
    }
    return atoms;
}

Criterion p_criterion(const json& j) {
    Criterion out;
    for (const json& a : j) {
        std::string kind = a.at("kind").get<std::string>();
        if (kind == "equals") {
            out.atoms.push_back(AtomEquals{a.at("name").get<std::string>(), p_attr_value(a.at("value"))});
        } else if (kind == "range") {
            out.atoms.push_back(AtomInRange{a.at("name").get<std::string>(),
                                            a.at("lo").get<std::int64_t>(),
                                            a.at("hi").get<std::int64_t>()});
        } else if (kind == "member") {
            AtomMemberOf mb{a.at("name").get<std::string>(), {}};
            for (const json& v : a.at("values")) mb.values.push_back(p_attr_value(v));
            out.atoms.push_back(std::move(mb));
        } else {
            throw TranscriptError("unknown criterion atom kind: " + kind);
        }
    }
    return out;
}

json j_cipher(const Ciphertext& c) {
    return {{"nonce", j_array(c.nonce)}, {"body", j_bytes(c.body)}};
}

Ciphertext p_cipher(const json& j) {
    return {p_array<kNonceLen>(j.at("nonce")), p_bytes(j.at("body"))};
}

json j_balances(const std::map<PartyId, TokenCount>& b) {
    json out = json::object();
    for (const auto& [id, amount] : b) out[id] = amount;
    return out;
}

std::map<PartyId, TokenCount> p_balances(const json& j) {
    std::map<PartyId, TokenCount> out;
    for (const auto& [id, amount] : j.items()) out[id] = amount.get<TokenCount>();
    return out;
}

json j_message(const Message& m) {
    json out;
    out["tag"] = tag_name(message_tag(m));
    if (const auto* ci = std::get_if<MsgCertifyInput>(&m)) {
        out["sid"] = j_sid(ci->sid);
        out["seller"] = ci->seller_id;
        out["data"] = j_bytes(ci->data);
        out["attrs"] = j_attrs(ci->attrs);
    } else if (const auto* c = std::get_if<MsgCert>(&m)) {
        out["sid"] = j_sid(c->sid);
        out["key"] = j_array(c->key.bytes);
        out["data"] = j_bytes(c->data);
        out["cipher"] = j_cipher(c->cipher);
        out["attrs"] = j_attrs(c->attrs);
        out["y"] = j_array(c->y.bytes);
        out["x"] = j_array(c->x.bytes);
        out["sig"] = j_array(c->sig.bytes);
    } else if (const auto* b = std::get_if<MsgBuying>(&m)) {
        out["bid"] = j_bid(b->bid);
        out["criterion"] = j_criterion(b->criterion);
    } else if (const auto* s = std::get_if<MsgSelling>(&m)) {
        out["bid"] = j_bid(s->bid);
        out["notary"] = s->notary_id;
        out["cipher"] = j_cipher(s->cipher);
        out["attrs"] = j_attrs(s->attrs);
        out["y"] = j_array(s->y.bytes);
        out["x"] = j_array(s->x.bytes);
        out["sig"] = j_array(s->sig.bytes);
    } else if (const auto* o = std::get_if<MsgContractOpen>(&m)) {
        out["bid"] = j_bid(o->bid);
        out["condition"] = j_array(o->condition.bytes);
        out["amount"] = o->amount;
    } else if (const auto* cl = std::get_if<MsgContractClose>(&m)) {
        out["bid"] = j_bid(cl->bid);
        out["key"] = j_array(cl->key.bytes);
    } else {
        const auto& lu = std::get<MsgLedgerUpdate>(m);
        out["bid"] = j_bid(lu.bid);
        out["balances"] = j_balances(lu.balances);
    }
    return out;
}

Message p_message(const json& j) {
    std::string tag = j.at("tag").get<std::string>();
    if (tag == "CertifyInput")
        return MsgCertifyInput{p_sid(j.at("sid")), j.at("seller").get<std::string>(),
                               p_bytes(j.at("data")), p_attrs(j.at("attrs"))};
    if (tag == "Cert")
        return MsgCert{p_sid(j.at("sid")),
                       SymKey{p_array<kSymKeyLen>(j.at("key"))},
                       p_bytes(j.at("data")),
                       p_cipher(j.at("cipher")),
                       p_attrs(j.at("attrs")),
                       Digest{p_array<kDigestLen>(j.at("y"))},
                       Digest{p_array<kDigestLen>(j.at("x"))},
                       Signature{p_array<kSignatureLen>(j.at("sig"))}};
    if (tag == "Buying") return MsgBuying{p_bid(j.at("bid")), p_criterion(j.at("criterion"))};
    if (tag == "Selling")
        return MsgSelling{p_bid(j.at("bid")),
                          j.at("notary").get<std::string>(),
                          p_cipher(j.at("cipher")),
                          p_attrs(j.at("attrs")),
                          Digest{p_array<kDigestLen>(j.at("y"))},
                          Digest{p_array<kDigestLen>(j.at("x"))},
                          Signature{p_array<kSignatureLen>(j.at("sig"))}};
    if (tag == "ContractOpen")
        return MsgContractOpen{p_bid(j.at("bid")), Digest{p_array<kDigestLen>(j.at("condition"))},
                               j.at("amount").get<TokenCount>()};
    if (tag == "ContractClose")
        return MsgContractClose{p_bid(j.at("bid")), SymKey{p_array<kSymKeyLen>(j.at("key"))}};
    if (tag == "LedgerUpdate")
        return MsgLedgerUpdate{p_bid(j.at("bid")), p_balances(j.at("balances"))};
    throw TranscriptError("unknown message tag: " + tag);
}

json j_output(const PartyOutput& o) {
    if (const auto* c = std::get_if<OutCertReceived>(&o))
        return {{"kind", "cert_received"}, {"sid", j_sid(c->sid)}};
    if (const auto* f = std::get_if<OutOfferReceived>(&o))
        return {{"kind", "offer_received"}, {"bid", j_bid(f->bid)}};
    if (const auto* m = std::get_if<OutMessage>(&o)) {
        json out = {{"kind", "message"}, {"bid", j_bid(m->bid)}};
        out["data"] = m->data ? json(j_bytes(*m->data)) : json(nullptr);
        return out;
    }
    const auto& p = std::get<OutPaymentReceived>(o);
    return {{"kind", "payment_received"}, {"bid", j_bid(p.bid)}};
}

PartyOutput p_output(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "cert_received") return OutCertReceived{p_sid(j.at("sid"))};
    if (kind == "offer_received") return OutOfferReceived{p_bid(j.at("bid"))};
    if (kind == "message") {
        OutMessage m{p_bid(j.at("bid")), std::nullopt};
        if (!j.at("data").is_null()) m.data = p_bytes(j.at("data"));
        return m;
    }
    if (kind == "payment_received") return OutPaymentReceived{p_bid(j.at("bid"))};
    throw TranscriptError("unknown output kind: " + kind);
}

Channel p_channel(const std::string& s) {
    if (s == "confidential") return Channel::Confidential;
    if (s == "public") return Channel::Public;
    throw TranscriptError("unknown channel: " + s);
}

Role p_role(const std::string& s) {
    if (s == "notary") return Role::Notary;
    if (s == "seller") return Role::Seller;
    if (s == "buyer") return Role::Buyer;
    throw TranscriptError("unknown role: " + s);
}

MessageTag p_tag(const std::string& s) {
    for (MessageTag t : {MessageTag::CertifyInput, MessageTag::Cert, MessageTag::Buying,
                         MessageTag::Selling, MessageTag::ContractOpen, MessageTag::ContractClose,
                         MessageTag::LedgerUpdate})
        if (s == tag_name(t)) return t;
    throw TranscriptError("unknown message tag: " + s);
}

Outcome p_outcome(const std::string& s) {
    for (Outcome o :
         {Outcome::Settled, Outcome::NoProgress, Outcome::StuckEscrow, Outcome::BudgetExceeded})
        if (s == outcome_name(o)) return o;
    throw TranscriptError("unknown outcome: " + s);
}

json j_record(const RunRecord& rec) {
    json out;
    if (const auto* c = std::get_if<RecCertify>(&rec)) {
        out["type"] = "certify";
        out["step"] = c->step;
        out["input"] = j_message(Message{c->input});
    } else if (const auto* b = std::get_if<RecBuy>(&rec)) {
        out["type"] = "buy";
        out["step"] = b->step;
        out["offer"] = j_message(Message{b->offer});
        out["amount"] = b->amount;
    } else if (const auto* s = std::get_if<RecSell>(&rec)) {
        out["type"] = "sell";
        out["step"] = s->step;
        out["seller"] = s->seller;
        out["sid"] = j_sid(s->sid);
        out["bid"] = j_bid(s->bid);
        out["accepted"] = s->accepted;
        out["reason"] = s->reason;
    } else if (const auto* e = std::get_if<RecEnqueue>(&rec)) {
        out["type"] = "enqueue";
        out["step"] = e->step;
        out["msg_id"] = e->msg_id;
        out["sender"] = e->sender;
        out["receiver"] = e->receiver;
        out["channel"] = channel_name(e->channel);
        out["tag"] = tag_name(e->tag);
        out["encoded_len"] = e->encoded_len;
        out["payload"] = e->payload ? j_message(*e->payload) : json(nullptr);
    } else if (const auto* a = std::get_if<RecAction>(&rec)) {
        out["type"] = "action";
        out["step"] = a->step;
        out["kind"] = a->kind;
        out["msg_id"] = a->msg_id ? json(*a->msg_id) : json(nullptr);
        out["to"] = a->to ? json(*a->to) : json(nullptr);
        out["claimed_sender"] = a->claimed_sender ? json(*a->claimed_sender) : json(nullptr);
        out["payload"] = a->payload ? j_message(*a->payload) : json(nullptr);
    } else if (const auto* d = std::get_if<RecDeliver>(&rec)) {
        out["type"] = "deliver";
        out["step"] = d->step;
        out["msg_id"] = d->msg_id ? json(*d->msg_id) : json(nullptr);
        out["sender"] = d->sender;
        out["to"] = d->to;
        out["payload"] = j_message(d->payload);
        out["accepted"] = d->accepted;
        out["reason"] = d->reason;
        out["replay"] = d->replay;
    } else if (const auto* cs = std::get_if<RecChainSubmit>(&rec)) {
        out["type"] = "chain";
        out["step"] = cs->step;
        out["sender"] = cs->sender;
        out["payload"] = j_message(cs->payload);
        out["applied"] = cs->applied;
        out["reason"] = cs->reason;
        out["tape_first"] = cs->tape_first;
        out["tape_count"] = cs->tape_count;
        out["balances"] = j_balances(cs->balances);
        out["immobilized"] = cs->immobilized;
    } else {
        const auto& o = std::get<RecOutput>(rec);
        out["type"] = "output";
        out["step"] = o.step;
        out["party"] = o.party;
        out["output"] = j_output(o.output);
    }
    return out;
}

RunRecord p_record(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "certify") {
        Message m = p_message(j.at("input"));
        return RecCertify{j.at("step").get<std::uint64_t>(), std::get<MsgCertifyInput>(m)};
    }
    if (type == "buy") {
        Message m = p_message(j.at("offer"));
        return RecBuy{j.at("step").get<std::uint64_t>(), std::get<MsgBuying>(m),
                      j.at("amount").get<TokenCount>()};
    }
    if (type == "sell")
        return RecSell{j.at("step").get<std::uint64_t>(), j.at("seller").get<std::string>(),
                       p_sid(j.at("sid")),          p_bid(j.at("bid")),
                       j.at("accepted").get<bool>(), j.at("reason").get<std::string>()};
    if (type == "enqueue") {
        RecEnqueue e;
        e.step = j.at("step").get<std::uint64_t>();
        e.msg_id = j.at("msg_id").get<std::uint64_t>();
        e.sender = j.at("sender").get<std::string>();
        e.receiver = j.at("receiver").get<std::string>();
        e.channel = p_channel(j.at("channel").get<std::string>());
        e.tag = p_tag(j.at("tag").get<std::string>());
        e.encoded_len = j.at("encoded_len").get<std::size_t>();
        if (!j.at("payload").is_null()) e.payload = p_message(j.at("payload"));
        return e;
    }
    if (type == "action") {
        RecAction a;
        a.step = j.at("step").get<std::uint64_t>();
        a.kind = j.at("kind").get<std::string>();
        if (!j.at("msg_id").is_null()) a.msg_id = j.at("msg_id").get<std::uint64_t>();
        if (!j.at("to").is_null()) a.to = j.at("to").get<std::string>();
        if (!j.at("claimed_sender").is_null())
            a.claimed_sender = j.at("claimed_sender").get<std::string>();
        if (!j.at("payload").is_null()) a.payload = p_message(j.at("payload"));
        return a;
    }
    if (type == "deliver") {
        RecDeliver d;
        d.step = j.at("step").get<std::uint64_t>();
        if (!j.at("msg_id").is_null()) d.msg_id = j.at("msg_id").get<std::uint64_t>();
        d.sender = j.at("sender").get<std::string>();
        d.to = j.at("to").get<std::string>();
        d.payload = p_message(j.at("payload"));
        d.accepted = j.at("accepted").get<bool>();
        d.reason = j.at("reason").get<std::string>();
        d.replay = j.at("replay").get<bool>();
        return d;
    }
    if (type == "chain") {
        RecChainSubmit cs;
        cs.step = j.at("step").get<std::uint64_t>();
        cs.sender = j.at("sender").get<std::string>();
        cs.payload = p_message(j.at("payload"));
        cs.applied = j.at("applied").get<bool>();
        cs.reason = j.at("reason").get<std::string>();
        cs.tape_first = j.at("tape_first").get<std::uint64_t>();
        cs.tape_count = j.at("tape_count").get<std::uint64_t>();
        cs.balances = p_balances(j.at("balances"));
        cs.immobilized = j.at("immobilized").get<TokenCount>();
        return cs;
    }
    if (type == "output")
        return RecOutput{j.at("step").get<std::uint64_t>(), j.at("party").get<std::string>(),
                         p_output(j.at("output"))};
    throw TranscriptError("unknown record type: " + type);
}

} // namespace

std::string transcript_to_string(const RunTranscript& t) {
    std::ostringstream os;
    json header;
    header["type"] = "header";
    header["seed"] = t.seed;
    header["step_budget"] = t.step_budget;
    header["policy"] = t.policy_name;
    json params = json::object();
    for (const auto& [k, v] : t.policy_params) params[k] = v;
    header["policy_params"] = params;
    json parties = json::array();
    for (const PartyMeta& p : t.parties)
        parties.push_back({{"id", p.id},
                           {"role", role_name(p.role)},
                           {"corrupted", p.corrupted},
                           {"balance", p.initial_balance},
                           {"verify_key", p.verify_key_hex}});
    header["parties"] = parties;
    os << header.dump() << '\n';

    for (const RunRecord& rec : t.records) os << j_record(rec).dump() << '\n';

    json summary;
    summary["type"] = "summary";
    summary["outcome"] = outcome_name(t.outcome);
    summary["steps"] = t.steps;
    summary["final_balances"] = j_balances(t.final_balances);
    summary["final_immobilized"] = t.final_immobilized;
    os << summary.dump() << '\n';
    return os.str();
}

void save_transcript(const RunTranscript& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw TranscriptError("cannot write " + path);
    f << transcript_to_string(t);
    if (!f) throw TranscriptError("write failed for " + path);
}

RunTranscript transcript_from_string(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    RunTranscript t;
    bool have_header = false, have_summary = false;

    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw TranscriptError("second header");
                have_header = true;
                t.seed = j.at("seed").get<std::uint64_t>();
                t.step_budget = j.at("step_budget").get<std::uint64_t>();
                t.policy_name = j.at("policy").get<std::string>();
                for (const auto& [k, v] : j.at("policy_params").items())
                    t.policy_params[k] = v.get<std::string>();
                for (const json& p : j.at("parties")) {
                    PartyMeta m;
                    m.id = p.at("id").get<std::string>();
                    m.role = p_role(p.at("role").get<std::string>());
                    m.corrupted = p.at("corrupted").get<bool>();
                    m.initial_balance = p.at("balance").get<TokenCount>();
                    m.verify_key_hex = p.at("verify_key").get<std::string>();
                    t.parties.push_back(std::move(m));
                }
            } else if (type == "summary") {
                have_summary = true;
                t.outcome = p_outcome(j.at("outcome").get<std::string>());
                t.steps = j.at("steps").get<std::uint64_t>();
                t.final_balances = p_balances(j.at("final_balances"));
                t.final_immobilized = j.at("final_immobilized").get<TokenCount>();
            } else if (type == "diff") {
                // appended report lines; not part of the run itself
            } else {
                if (!have_header) throw TranscriptError("record before header");
                if (have_summary) throw TranscriptError("record after summary");
                t.records.push_back(p_record(j));
            }
        } catch (const std::exception& ex) {
            std::string what = ex.what();
            constexpr std::string_view prefix = "transcript: ";
            if (what.starts_with(prefix)) what.erase(0, prefix.size());
            throw TranscriptError("line " + std::to_string(lineno) + ": " + what);
        }
    }
    if (!have_header) throw TranscriptError("missing header line");
    if (!have_summary) throw TranscriptError("missing summary line (truncated run?)");
    return t;
}

RunTranscript load_transcript(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TranscriptError("cannot read " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return transcript_from_string(buf.str());
}

std::string diff_report_line(const RunTranscript& t, const DiffReport& report) {
    json j;
    j["type"] = "diff";
    j["equivalent"] = report.equivalent;
    j["unmappable"] = report.unmappable;
    j["detail"] = report.detail;

    // Both sequences as the comparison sees them: honest parties only, and
    // payment acknowledgements excluded on the real side (the ideal machine
    // never emits them).
    std::map<PartyId, const PartyMeta*> meta;
    for (const PartyMeta& p : t.parties) meta[p.id] = &p;
    json real = json::object();
    for (const RunRecord& rec : t.records) {
        const auto* o = std::get_if<RecOutput>(&rec);
        if (!o) continue;
        auto mit = meta.find(o->party);
        if (mit == meta.end() || mit->second->corrupted) continue;
        if (std::holds_alternative<OutPaymentReceived>(o->output)) continue;
        real[o->party].push_back(output_display(o->output));
    }
    j["real_outputs"] = real;

    ProjectionResult proj = project_schedule(t);
    if (proj.unmappable) {
        j["ideal_outputs"] = nullptr;
    } else {
        json ideal = json::object();
        IdealState st(t.parties);
        try {
            for (const IdealEvent& ev : proj.schedule)
                for (const IdealOutput& io : st.apply(ev))
                    ideal[io.party].push_back(output_display(io.output));
        } catch (const InvalidEvent&) {
            // the schedule itself is ill-formed; report what was produced
        }
        j["ideal_outputs"] = ideal;
    }
    return j.dump();
}

std::vector<Action> extract_actions(const RunTranscript& t) {
    std::vector<Action> out;
    for (const RunRecord& rec : t.records) {
        const auto* a = std::get_if<RecAction>(&rec);
        if (!a) continue;
        if (a->kind == "deliver") {
            out.push_back(ActDeliver{a->msg_id.value(), a->to});
        } else if (a->kind == "drop") {
            out.push_back(ActDrop{a->msg_id.value()});
        } else if (a->kind == "replay") {
            out.push_back(ActReplay{a->msg_id.value(), a->to});
        } else if (a->kind == "inject") {
            out.push_back(ActInject{a->claimed_sender.value(), a->to.value(), a->payload.value()});
        } else {
            out.push_back(ActNoOp{});
        }
    }
    return out;
}

} // namespace fairex
