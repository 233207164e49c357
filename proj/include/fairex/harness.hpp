#pragma once

#include <optional>
#include <string>

#include "fairex/ideal.hpp"
#include "fairex/scenario.hpp"

namespace fairex {

// Budget precedence: an explicit step_budget in the scenario file wins,
// then the FAIREX_STEP_BUDGET environment variable, then the built-in
// default. Throws ValidationError on an unparsable override.
RunTranscript run_scenario(const Scenario& sc, std::optional<std::uint64_t> seed_override = {});

struct CheckResult {
    bool ok = true;
    std::string detail = "ok";
};

// Chain-level soundness, recomputed from the submission records alone:
// escrow moves only through applied opens and closes, an applied close
// pays exactly when its key hashes to the lock and publishes key and
// payment in the same atomic submission, and every recorded balance
// snapshot matches the recomputation.
CheckResult check_fairness(const RunTranscript& t);

// Sum of balances plus immobilized escrow equals the initial supply at
// every chain submission and at the end of the run.
CheckResult check_conservation(const RunTranscript& t);

// 0 settled, 2 no progress, 3 stuck escrow, 4 budget exceeded. Scenario
// and usage errors exit 1; the diff verdicts exit 5 (outputs diverge)
// and 6 (the run does not map onto the reference semantics).
int outcome_exit_code(Outcome o);
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDivergence = 5;
inline constexpr int kExitUnmappable = 6;

} // namespace fairex
