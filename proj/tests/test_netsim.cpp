#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "fairex/netsim.hpp"
#include "fairex/policies.hpp"

using namespace fairex;

namespace {

const Bytes kGoods = {'p', 'l', 'a', 'n', 's'};

AttributeSet attrs_age30() {
    AttributeSet s;
    s.entries["age"] = std::int64_t{30};
    return s;
}

Criterion wants_age30() { return Criterion{{AtomEquals{"age", std::int64_t{30}}}}; }

SessionId kSid{"N", {1, 2, 3, 4, 5, 6, 7, 8}};
OfferId kBid{"B", {9, 10, 11, 12, 13, 14, 15, 16}};

Setup base_setup(std::uint64_t seed) {
    Setup s;
    s.seed = seed;
    s.parties = {{"N", Role::Notary, 0, {}, {}},
                 {"S", Role::Seller, 5, {}, {}},
                 {"B", Role::Buyer, 10, {}, {}}};
    s.certifies = {{kSid, "S", kGoods, attrs_age30(), 0}};
    s.buys = {{kBid, wants_age30(), 1, 0}};
    s.sells = {{"S", kSid, kBid, std::nullopt}};
    s.policy_name = "eager";
    return s;
}

RunTranscript run_with(const Setup& s, const std::string& policy,
                       const std::map<std::string, std::string>& params = {}) {
    auto p = make_policy(policy, params);
    Engine engine(s, *p);
    return engine.run();
}

std::vector<PartyOutput> outputs_of(const RunTranscript& t, const PartyId& who) {
    std::vector<PartyOutput> out;
    for (const RunRecord& r : t.records)
        if (const auto* o = std::get_if<RecOutput>(&r))
            if (o->party == who) out.push_back(o->output);
    return out;
}

template <typename T>
std::vector<T> records_of(const RunTranscript& t) {
    std::vector<T> out;
    for (const RunRecord& r : t.records)
        if (const auto* x = std::get_if<T>(&r)) out.push_back(*x);
    return out;
}

} // namespace

TEST_CASE("honest run settles end to end") {
    RunTranscript t = run_with(base_setup(1), "eager");

    REQUIRE(t.outcome == Outcome::Settled);
    CHECK(t.final_balances.at("B") == 9);
    CHECK(t.final_balances.at("S") == 6);
    CHECK(t.final_balances.at("N") == 0);
    CHECK(t.final_immobilized == 0);

    auto seller_out = outputs_of(t, "S");
    REQUIRE(seller_out.size() == 3);
    CHECK(seller_out[0] == PartyOutput{OutCertReceived{kSid}});
    CHECK(seller_out[1] == PartyOutput{OutOfferReceived{kBid}});
    CHECK(seller_out[2] == PartyOutput{OutPaymentReceived{kBid}});

    auto buyer_out = outputs_of(t, "B");
    REQUIRE(buyer_out.size() == 1);
    CHECK(buyer_out[0] == PartyOutput{OutMessage{kBid, kGoods}});

    CHECK(outputs_of(t, "N").empty());
}

TEST_CASE("run is a pure function of setup and seed") {
    Setup s = base_setup(42);
    RunTranscript a = run_with(s, "random");
    RunTranscript b = run_with(s, "random");
    CHECK(a.records == b.records);
    CHECK(a.outcome == b.outcome);
    CHECK(a.final_balances == b.final_balances);
    CHECK(a.steps == b.steps);

    Setup other = base_setup(43);
    RunTranscript c = run_with(other, "random");
    CHECK(a.records != c.records);
}

namespace {

// Defers to eager delivery but asserts, on every step, that confidential
// payloads are invisible while public ones are exposed.
struct LeakProbe : AdversaryPolicy {
    std::size_t confidential_seen = 0;

    Action on_step(const PolicyView& v, Rng&) override {
        for (const FlightView& f : v.flights) {
            if (f.channel == Channel::Confidential) {
                ++confidential_seen;
                CHECK(f.payload == nullptr);
                CHECK(f.encoded_len > 0);
                CHECK((f.tag == MessageTag::Cert || f.tag == MessageTag::Selling));
            } else {
                CHECK(f.payload != nullptr);
            }
        }
        for (const FlightView& f : v.flights)
            if (f.status == FlightStatus::Pending) return ActDeliver{f.msg_id, std::nullopt};
        return ActNoOp{};
    }
};

} // namespace

TEST_CASE("confidential flights leak only tag and length") {
    Setup s = base_setup(2);
    LeakProbe probe;
    Engine engine(s, probe);
    RunTranscript t = engine.run();

    CHECK(t.outcome == Outcome::Settled);
    CHECK(probe.confidential_seen > 0);

    for (const RecEnqueue& e : records_of<RecEnqueue>(t)) {
        if (e.channel == Channel::Confidential) {
            CHECK(!e.payload.has_value());
            CHECK(e.encoded_len > 0);
        } else {
            REQUIRE(e.payload.has_value());
            CHECK(encode(*e.payload).size() == e.encoded_len);
        }
    }
}

TEST_CASE("drop_all starves every party") {
    RunTranscript t = run_with(base_setup(3), "drop_all");
    CHECK(t.outcome == Outcome::NoProgress);
    CHECK(records_of<RecOutput>(t).empty());
    CHECK(records_of<RecChainSubmit>(t).empty());
    CHECK(t.final_balances.at("B") == 10);
    CHECK(t.final_balances.at("S") == 5);
}

TEST_CASE("dropping the selling message stalls before any escrow") {
    Setup s = base_setup(4);
    auto p = make_policy("drop_tag", {{"tag", "Selling"}});
    Engine engine(s, *p);
    RunTranscript t = engine.run();

    CHECK(t.outcome == Outcome::NoProgress);
    CHECK(t.final_immobilized == 0);
    CHECK(t.final_balances.at("B") == 10);
    CHECK(engine.seller("S")->pending_sales().contains(kBid));
    CHECK(engine.chain().tape().empty());
}

TEST_CASE("dropping the close strands the escrow") {
    RunTranscript t = run_with(base_setup(5), "drop_tag", {{"tag", "ContractClose"}});

    CHECK(t.outcome == Outcome::StuckEscrow);
    CHECK(t.final_immobilized == 1);
    CHECK(t.final_balances.at("B") == 9);
    CHECK(t.final_balances.at("S") == 5);
    for (const PartyOutput& o : outputs_of(t, "B"))
        CHECK(!std::holds_alternative<OutMessage>(o));
}

TEST_CASE("replays are absorbed exactly once") {
    RunTranscript t = run_with(base_setup(6), "replay_happy");

    REQUIRE(t.outcome == Outcome::Settled);
    CHECK(t.final_balances.at("B") == 9);
    CHECK(t.final_balances.at("S") == 6);

    std::size_t messages = 0, payments = 0;
    for (const RecOutput& o : records_of<RecOutput>(t)) {
        if (std::holds_alternative<OutMessage>(o.output)) ++messages;
        if (std::holds_alternative<OutPaymentReceived>(o.output)) ++payments;
    }
    CHECK(messages == 1);
    CHECK(payments == 1);

    std::size_t replayed = 0;
    for (const RecDeliver& d : records_of<RecDeliver>(t)) {
        if (!d.replay) continue;
        ++replayed;
        CHECK(!d.accepted);
    }
    CHECK(replayed > 0);

    std::size_t applied_closes = 0, rejected_closes = 0;
    for (const RecChainSubmit& c : records_of<RecChainSubmit>(t)) {
        if (!std::holds_alternative<MsgContractClose>(c.payload)) continue;
        if (c.applied)
            ++applied_closes;
        else {
            CHECK(c.reason == "already_closed");
            ++rejected_closes;
        }
    }
    CHECK(applied_closes == 1);
    CHECK(rejected_closes >= 1);
}

TEST_CASE("step budget exhaustion is reported, not looped") {
    Setup s = base_setup(7);
    s.step_budget = 3;
    RunTranscript t = run_with(s, "eager");
    CHECK(t.outcome == Outcome::BudgetExceeded);
    CHECK(t.steps == 3);
}

TEST_CASE("reactive sale waits for both certificate and offer") {
    Setup s = base_setup(8);
    RunTranscript t = run_with(s, "drop_tag", {{"tag", "Buying"}});
    CHECK(t.outcome == Outcome::NoProgress);
    CHECK(records_of<RecSell>(t).empty());

    SUBCASE("a scheduled sale fires regardless and is refused") {
        Setup forced = base_setup(9);
        forced.sells[0].at_step = 50;
        RunTranscript u = run_with(forced, "drop_tag", {{"tag", "Buying"}});
        auto sells = records_of<RecSell>(u);
        REQUIRE(sells.size() == 1);
        CHECK(!sells[0].accepted);
        CHECK(sells[0].reason == "no_such_offer");
        CHECK(u.outcome == Outcome::NoProgress);
    }
}

TEST_CASE("policy violations abort the run") {
    Setup s = base_setup(10);
    // flight 0 is the confidential certificate N->S, flight 1 the first
    // public Buying copy
    auto expect_violation = [&](std::vector<Action> script) {
        auto p = make_scripted_policy(std::move(script));
        Engine engine(s, *p);
        CHECK_THROWS_AS(engine.run(), PolicyViolation);
    };

    SUBCASE("unknown msg id") { expect_violation({ActDeliver{99, std::nullopt}}); }
    SUBCASE("double delivery of one flight") {
        expect_violation({ActDeliver{0, std::nullopt}, ActDeliver{0, std::nullopt}});
    }
    SUBCASE("drop after delivery") {
        expect_violation({ActDeliver{0, std::nullopt}, ActDrop{0}});
    }
    SUBCASE("redirecting a confidential flight") {
        expect_violation({ActDeliver{0, PartyId("B")}});
    }
    SUBCASE("redirecting a public flight into the chain") {
        expect_violation({ActDeliver{1, PartyId(kChainId)}});
    }
    SUBCASE("delivery to an unknown target") {
        expect_violation({ActDeliver{1, PartyId("nobody")}});
    }
    SUBCASE("forged chain submission from an honest identity") {
        expect_violation({ActInject{"B", kChainId, MsgContractClose{kBid, SymKey{}}}});
    }
}

TEST_CASE("notary misbehavior is caught clause by clause") {
    auto corrupt_run = [](NotaryMisbehavior kind) {
        Setup s = base_setup(11);
        s.parties[0].corrupt_notary = CorruptNotarySpec{kind, Bytes{'f', 'a', 'k', 'e'}};
        return run_with(s, "eager");
    };
    auto cert_rejection = [](const RunTranscript& t) -> std::string {
        for (const RecDeliver& d : records_of<RecDeliver>(t))
            if (d.to == "S" && std::holds_alternative<MsgCert>(d.payload)) {
                CHECK(!d.accepted);
                return d.reason;
            }
        return "<no cert delivery>";
    };

    SUBCASE("broken signature") {
        RunTranscript t = corrupt_run(NotaryMisbehavior::BadSig);
        CHECK(cert_rejection(t) == "bad_signature");
        CHECK(t.outcome == Outcome::NoProgress);
    }
    SUBCASE("ciphertext digest lies") {
        RunTranscript t = corrupt_run(NotaryMisbehavior::BadY);
        CHECK(cert_rejection(t) == "y_mismatch");
        CHECK(t.outcome == Outcome::NoProgress);
    }
    SUBCASE("key digest lies") {
        RunTranscript t = corrupt_run(NotaryMisbehavior::BadX);
        CHECK(cert_rejection(t) == "x_mismatch");
        CHECK(t.outcome == Outcome::NoProgress);
    }
    SUBCASE("stated plaintext differs from the ciphertext") {
        RunTranscript t = corrupt_run(NotaryMisbehavior::WrongM);
        CHECK(cert_rejection(t) == "plaintext_mismatch");
        CHECK(t.outcome == Outcome::NoProgress);
    }
    SUBCASE("consistent lies pass every check and deliver the lie") {
        RunTranscript t = corrupt_run(NotaryMisbehavior::ConsistentFalse);
        REQUIRE(t.outcome == Outcome::Settled);
        auto buyer_out = outputs_of(t, "B");
        REQUIRE(buyer_out.size() == 1);
        CHECK(buyer_out[0] == PartyOutput{OutMessage{kBid, Bytes{'f', 'a', 'k', 'e'}}});
        CHECK(t.final_balances.at("S") == 6);
    }
}

TEST_CASE("corrupt seller burns wrong keys without shaking the contract") {
    Setup s = base_setup(12);
    s.parties[1].corrupt_seller = CorruptSellerSpec{7, true};
    RunTranscript t = run_with(s, "eager");

    REQUIRE(t.outcome == Outcome::Settled);
    std::size_t mismatches = 0, applied = 0;
    for (const RecChainSubmit& c : records_of<RecChainSubmit>(t)) {
        if (!std::holds_alternative<MsgContractClose>(c.payload)) continue;
        if (c.applied)
            ++applied;
        else if (c.reason == "hash_mismatch")
            ++mismatches;
    }
    CHECK(mismatches == 7);
    CHECK(applied == 1);
    CHECK(t.final_balances.at("S") == 6);
    CHECK(t.final_balances.at("B") == 9);

    auto buyer_out = outputs_of(t, "B");
    REQUIRE(buyer_out.size() == 1);
    CHECK(buyer_out[0] == PartyOutput{OutMessage{kBid, kGoods}});
}

TEST_CASE("front runner races the close and takes the payout") {
    RunTranscript t = run_with(base_setup(13), "front_runner");

    REQUIRE(t.outcome == Outcome::Settled);
    CHECK(t.final_balances.at("mallory") == 1);
    CHECK(t.final_balances.at("S") == 5);
    CHECK(t.final_balances.at("B") == 9);

    for (const PartyOutput& o : outputs_of(t, "S"))
        CHECK(!std::holds_alternative<OutPaymentReceived>(o));

    // the key still reached the tape, so the buyer is made whole
    auto buyer_out = outputs_of(t, "B");
    REQUIRE(buyer_out.size() == 1);
    CHECK(buyer_out[0] == PartyOutput{OutMessage{kBid, kGoods}});

    TokenCount total = 0;
    for (const auto& [id, bal] : t.final_balances) total += bal;
    CHECK(total == 15);
}

TEST_CASE("spoofed tape broadcasts bypass the chain entirely") {
    Setup s = base_setup(14);
    auto p = make_policy("spoof_open");
    Engine engine(s, *p);
    RunTranscript t = engine.run();

    CHECK(engine.chain().tape().empty());
    CHECK(records_of<RecChainSubmit>(t).empty());
    CHECK(t.final_balances.at("B") == 10);
    CHECK(t.final_balances.at("S") == 5);

    // the buyer walked away with the goods and never paid: parties cannot
    // authenticate tape broadcasts, which is exactly what the equivalence
    // oracle exists to flag
    auto buyer_out = outputs_of(t, "B");
    REQUIRE(buyer_out.size() == 1);
    CHECK(buyer_out[0] == PartyOutput{OutMessage{kBid, kGoods}});
}

TEST_CASE("policy registry") {
    auto names = policy_names();
    for (const char* expected : {"eager", "random", "drop_rate", "drop_all", "drop_tag",
                                 "replay_happy", "front_runner", "spoof_open"})
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());

    CHECK_THROWS_AS((void)make_policy("nonexistent"), std::invalid_argument);
    CHECK_THROWS_AS((void)make_policy("drop_rate"), std::invalid_argument);
    CHECK_THROWS_AS((void)make_policy("drop_rate", {{"p", "1.5"}}), std::invalid_argument);
    CHECK_THROWS_AS((void)make_policy("drop_rate", {{"p", "zero"}}), std::invalid_argument);
    CHECK_NOTHROW((void)make_policy("drop_rate", {{"p", "0.25"}}));
}

TEST_CASE("drop_rate at extremes matches eager and drop_all") {
    Setup s = base_setup(15);
    RunTranscript never = run_with(s, "drop_rate", {{"p", "0"}});
    CHECK(never.outcome == Outcome::Settled);

    RunTranscript always = run_with(s, "drop_rate", {{"p", "1"}});
    CHECK(always.outcome == Outcome::NoProgress);
    CHECK(records_of<RecOutput>(always).empty());
}

TEST_CASE("setup validation rejects dangling references") {
    auto eager = make_policy("eager");

    Setup bad_notary = base_setup(16);
    bad_notary.certifies[0].sid.notary_id = "Q";
    CHECK_THROWS_AS(Engine(bad_notary, *eager), std::invalid_argument);

    Setup bad_seller = base_setup(17);
    bad_seller.sells[0].seller = "B";
    CHECK_THROWS_AS(Engine(bad_seller, *eager), std::invalid_argument);

    Setup reserved = base_setup(18);
    reserved.parties.push_back({kChainId, Role::Buyer, 0, {}, {}});
    CHECK_THROWS_AS(Engine(reserved, *eager), std::invalid_argument);

    Setup dup = base_setup(19);
    dup.parties.push_back({"B", Role::Buyer, 0, {}, {}});
    CHECK_THROWS_AS(Engine(dup, *eager), std::invalid_argument);
}
