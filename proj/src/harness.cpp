#include "fairex/harness.hpp"

#include <charconv>
#include <cstdlib>

#include "fairex/crypto.hpp"
#include "fairex/policies.hpp"

namespace fairex {

RunTranscript run_scenario(const Scenario& sc, std::optional<std::uint64_t> seed_override) {
    Setup setup = sc.setup;
    if (!sc.budget_explicit) {
        if (const char* env = std::getenv("FAIREX_STEP_BUDGET")) {
            std::string_view v(env);
            std::uint64_t budget = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), budget);
            if (ec != std::errc() || p != v.data() + v.size())
                throw ValidationError("FAIREX_STEP_BUDGET: expected an unsigned integer, got '" +
                                      std::string(v) + "'");
            setup.step_budget = budget;
        }
    }
    if (seed_override) setup.seed = *seed_override;
    auto policy = make_policy(setup.policy_name, setup.policy_params);
    Engine engine(setup, *policy);
    return engine.run();
}

namespace {

struct OpenState {
    Digest condition;
    TokenCount amount = 0;
    bool closed = false;
};

std::string fmt_step(const RecChainSubmit& cs) {
    return "step " + std::to_string(cs.step);
}

} // namespace

CheckResult check_fairness(const RunTranscript& t) {
    std::map<PartyId, TokenCount> expected;
    for (const PartyMeta& p : t.parties) expected[p.id] = p.initial_balance;
    TokenCount immobilized = 0;
    std::map<OfferId, OpenState> opens;

    auto fail = [](std::string why) { return CheckResult{false, std::move(why)}; };

    for (const RunRecord& rec : t.records) {
        const auto* cs = std::get_if<RecChainSubmit>(&rec);
        if (!cs) continue;

        if (cs->applied) {
            if (const auto* o = std::get_if<MsgContractOpen>(&cs->payload)) {
                auto [it, fresh] = opens.try_emplace(o->bid, OpenState{o->condition, o->amount});
                if (!fresh)
                    return fail(fmt_step(*cs) + ": the chain honored a duplicate contract id");
                auto bit = expected.find(cs->sender);
                if (bit == expected.end() || bit->second < o->amount)
                    return fail(fmt_step(*cs) + ": escrow immobilized without cover");
                bit->second -= o->amount;
                immobilized += o->amount;
                if (cs->tape_count != 1)
                    return fail(fmt_step(*cs) + ": an applied open must be published once");
            } else if (const auto* c = std::get_if<MsgContractClose>(&cs->payload)) {
                auto it = opens.find(c->bid);
                if (it == opens.end())
                    return fail(fmt_step(*cs) + ": close of a contract that was never opened");
                if (it->second.closed)
                    return fail(fmt_step(*cs) + ": close of an already-settled contract");
                if (hash(c->key.bytes) != it->second.condition)
                    return fail(fmt_step(*cs) +
                                ": payment released for a key that does not open the lock");
                it->second.closed = true;
                expected[cs->sender] += it->second.amount;
                immobilized -= it->second.amount;
                if (cs->tape_count != 2)
                    return fail(fmt_step(*cs) +
                                ": an applied close must publish the key and the payment "
                                "in the same submission");
            } else {
                return fail(fmt_step(*cs) + ": the chain applied a non-contract message");
            }
        } else if (cs->tape_count != 0) {
            return fail(fmt_step(*cs) + ": a rejected submission reached the tape");
        }

        if (cs->balances != expected)
            return fail(fmt_step(*cs) + ": balance snapshot does not match the recomputation");
        if (cs->immobilized != immobilized)
            return fail(fmt_step(*cs) + ": immobilized escrow does not match the recomputation");
    }

    if (t.final_balances != expected)
        return fail("final balances do not match the recomputation");
    if (t.final_immobilized != immobilized)
        return fail("final immobilized escrow does not match the recomputation");
    return {};
}

CheckResult check_conservation(const RunTranscript& t) {
    TokenCount supply = 0;
    for (const PartyMeta& p : t.parties) supply += p.initial_balance;

    auto total = [](const std::map<PartyId, TokenCount>& balances, TokenCount immobilized) {
        TokenCount sum = immobilized;
        for (const auto& [id, amount] : balances) sum += amount;
        return sum;
    };

    for (const RunRecord& rec : t.records) {
        const auto* cs = std::get_if<RecChainSubmit>(&rec);
        if (!cs) continue;
        if (total(cs->balances, cs->immobilized) != supply)
            return {false, "step " + std::to_string(cs->step) + ": tokens created or destroyed"};
    }
    if (total(t.final_balances, t.final_immobilized) != supply)
        return {false, "tokens created or destroyed by the end of the run"};
    return {};
}

int outcome_exit_code(Outcome o) {
    switch (o) {
    case Outcome::Settled: return 0;
    case Outcome::NoProgress: return 2;
    case Outcome::StuckEscrow: return 3;
    case Outcome::BudgetExceeded: return 4;
    }
    return kExitUsage;
}

} // namespace fairex
