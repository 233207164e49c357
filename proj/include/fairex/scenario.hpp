#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "fairex/netsim.hpp"

namespace fairex {

// Scenario files are INI-style: `[section]` or `[section name]` headers,
// `key = value` entries, `#` comments. Sections:
//
//   [run]                seed (required), step_budget, policy, policy.<param>
//   [party <id>]         role = notary|seller|buyer, balance
//   [certificate <label>] notary, seller, data, attrs, at
//   [offer <label>]      buyer, criterion, amount, at
//   [sell]               certificate, offer, seller (defaults to the
//                        certificate's), when = ready|<step>
//   [corrupt <id>]       behavior = consistent_false|bad_y|bad_x|bad_sig|
//                        wrong_m (with data) or wrong_keys (with count,
//                        then_correct)
//
// Octet strings are written `utf8:...` or `hex:...`; attribute values
// `int:30`, `str:NYC`, `bool:true`; attrs entries `name:type:value` joined
// by commas. Criteria are atoms joined by `&&`:
//
//   age == int:30      city in {str:LA, str:NYC}      age in 20..35

struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};
// The file is not well-formed: bad section header, bad literal, unknown key.
struct ParseError : ScenarioError {
    using ScenarioError::ScenarioError;
};
// The file parses but does not describe a runnable setup: missing seed,
// dangling references, role mismatches.
struct ValidationError : ScenarioError {
    using ScenarioError::ScenarioError;
};

struct Scenario {
    Setup setup;
    bool budget_explicit = false; // an explicit step_budget beats the
                                  // environment's default override
    std::map<std::string, SessionId> certificates; // label -> session id
    std::map<std::string, OfferId> offers;         // label -> offer id
};

// Errors carry "<origin>:<line>: <message>".
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::string& path);

} // namespace fairex
