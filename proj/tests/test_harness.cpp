#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "fairex/harness.hpp"
#include "fairex/policies.hpp"

using namespace fairex;

namespace {

const char* kHonest = R"([run]
seed = 7

[party N]
role = notary

[party S]
role = seller
balance = 5

[party B]
role = buyer
balance = 10

[certificate plans]
notary = N
seller = S
data = utf8:plans
attrs = age:int:30

[offer want]
buyer = B
criterion = age == int:30

[sell]
certificate = plans
offer = want
)";

Setup engine_setup(std::uint64_t seed) {
    Scenario sc = parse_scenario(kHonest);
    sc.setup.seed = seed;
    return sc.setup;
}

RunTranscript run_direct(const Setup& s, const std::string& policy,
                         const std::map<std::string, std::string>& params = {}) {
    auto p = make_policy(policy, params);
    Engine engine(s, *p);
    return engine.run();
}

} // namespace

TEST_CASE("run_scenario executes the parsed setup") {
    RunTranscript t = run_scenario(parse_scenario(kHonest));
    CHECK(t.outcome == Outcome::Settled);
    CHECK(t.seed == 7);
    CHECK(t.final_balances.at("B") == 9);
    CHECK(t.final_balances.at("S") == 6);
    CHECK(check_fairness(t).ok);
    CHECK(check_conservation(t).ok);
}

TEST_CASE("seed override replaces the file seed") {
    Scenario sc = parse_scenario(kHonest);
    RunTranscript t = run_scenario(sc, 1234);
    CHECK(t.seed == 1234);
    CHECK(t.outcome == Outcome::Settled);
}

TEST_CASE("unknown policy names are rejected at run time") {
    Scenario sc = parse_scenario(kHonest);
    sc.setup.policy_name = "oracle_of_delphi";
    CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);
}

TEST_CASE("budget precedence: file beats environment beats default") {
    Scenario sc = parse_scenario(kHonest);

    SUBCASE("environment override applies when the file is silent") {
        setenv("FAIREX_STEP_BUDGET", "3", 1);
        RunTranscript t = run_scenario(sc);
        CHECK(t.outcome == Outcome::BudgetExceeded);
        CHECK(t.steps == 3);
        CHECK(t.step_budget == 3);
    }
    SUBCASE("an explicit file budget wins") {
        setenv("FAIREX_STEP_BUDGET", "3", 1);
        Scenario tight = sc;
        tight.setup.step_budget = 200;
        tight.budget_explicit = true;
        RunTranscript t = run_scenario(tight);
        CHECK(t.outcome == Outcome::Settled);
        CHECK(t.step_budget == 200);
    }
    SUBCASE("an unparsable override is an error") {
        setenv("FAIREX_STEP_BUDGET", "lots", 1);
        CHECK_THROWS_AS(run_scenario(sc), ValidationError);
    }
    unsetenv("FAIREX_STEP_BUDGET");
}

TEST_CASE("fairness passes sound runs, adversarial or not") {
    CHECK(check_fairness(run_direct(engine_setup(1), "eager")).ok);
    for (std::uint64_t seed : {5u, 6u, 7u})
        CHECK(check_fairness(run_direct(engine_setup(seed), "random")).ok);
    CHECK(check_fairness(run_direct(engine_setup(2), "drop_all")).ok);
    CHECK(check_fairness(run_direct(engine_setup(3), "replay_happy")).ok);
    // the front-runner's stolen close carries the genuine key: chain-level
    // fairness holds even though the seller is robbed
    CHECK(check_fairness(run_direct(engine_setup(4), "front_runner")).ok);
}

TEST_CASE("fairness fails a chain that pays on the wrong key") {
    Setup s = engine_setup(9);
    s.parties[1].corrupt_seller = CorruptSellerSpec{1, true};
    s.break_close_check = true;
    RunTranscript t = run_direct(s, "eager");
    REQUIRE(t.outcome == Outcome::Settled);
    CheckResult r = check_fairness(t);
    CHECK_FALSE(r.ok);
    CHECK(r.detail.find("does not open the lock") != std::string::npos);

    // the same corruption against the real gate stays sound
    Setup sound = engine_setup(9);
    sound.parties[1].corrupt_seller = CorruptSellerSpec{1, true};
    CHECK(check_fairness(run_direct(sound, "eager")).ok);
}

TEST_CASE("fairness fails tampered records") {
    RunTranscript t = run_direct(engine_setup(1), "eager");
    REQUIRE(t.outcome == Outcome::Settled);

    SUBCASE("a forged balance snapshot") {
        for (RunRecord& rec : t.records)
            if (auto* cs = std::get_if<RecChainSubmit>(&rec)) {
                cs->balances["S"] += 1;
                break;
            }
        CheckResult r = check_fairness(t);
        CHECK_FALSE(r.ok);
        CHECK(r.detail.find("snapshot") != std::string::npos);
    }
    SUBCASE("forged final balances") {
        t.final_balances["S"] += 1;
        CHECK_FALSE(check_fairness(t).ok);
    }
    SUBCASE("a close smuggled past the lock") {
        for (RunRecord& rec : t.records)
            if (auto* cs = std::get_if<RecChainSubmit>(&rec))
                if (auto* c = std::get_if<MsgContractClose>(&cs->payload)) {
                    c->key.bytes[0] ^= 1;
                    break;
                }
        CheckResult r = check_fairness(t);
        CHECK_FALSE(r.ok);
        CHECK(r.detail.find("does not open the lock") != std::string::npos);
    }
}

TEST_CASE("conservation holds across policies and fails on token creation") {
    for (const char* policy : {"eager", "drop_all", "replay_happy", "front_runner"})
        CHECK(check_conservation(run_direct(engine_setup(8), policy)).ok);

    RunTranscript t = run_direct(engine_setup(8), "eager");
    for (RunRecord& rec : t.records)
        if (auto* cs = std::get_if<RecChainSubmit>(&rec)) {
            cs->balances["B"] += 100;
            break;
        }
    CheckResult r = check_conservation(t);
    CHECK_FALSE(r.ok);
    CHECK(r.detail.find("created or destroyed") != std::string::npos);
}

TEST_CASE("outcome exit codes") {
    CHECK(outcome_exit_code(Outcome::Settled) == 0);
    CHECK(outcome_exit_code(Outcome::NoProgress) == 2);
    CHECK(outcome_exit_code(Outcome::StuckEscrow) == 3);
    CHECK(outcome_exit_code(Outcome::BudgetExceeded) == 4);
    CHECK(kExitUsage == 1);
    CHECK(kExitDivergence == 5);
    CHECK(kExitUnmappable == 6);
}
