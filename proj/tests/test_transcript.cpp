#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fairex/ideal.hpp"
#include "fairex/netsim.hpp"
#include "fairex/policies.hpp"
#include "fairex/transcript.hpp"

using namespace fairex;

namespace {

const Bytes kGoods = {'p', 'l', 'a', 'n', 's'};

AttributeSet attrs_mixed() {
    AttributeSet s;
    s.entries["age"] = std::int64_t{30};
    s.entries["city"] = std::string{"NYC"};
    s.entries["insured"] = true;
    return s;
}

Criterion wants_mixed() {
    return Criterion{{AtomEquals{"insured", true}, AtomInRange{"age", 20, 35},
                      AtomMemberOf{"city", {std::string{"LA"}, std::string{"NYC"}}}}};
}

SessionId kSid{"N", {1, 2, 3, 4, 5, 6, 7, 8}};
OfferId kBid{"B", {9, 10, 11, 12, 13, 14, 15, 16}};

Setup base_setup(std::uint64_t seed) {
    Setup s;
    s.seed = seed;
    s.parties = {{"N", Role::Notary, 0, {}, {}},
                 {"S", Role::Seller, 5, {}, {}},
                 {"B", Role::Buyer, 10, {}, {}}};
    s.certifies = {{kSid, "S", kGoods, attrs_mixed(), 0}};
    s.buys = {{kBid, wants_mixed(), 1, 0}};
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

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

} // namespace

TEST_CASE("a run round-trips through the line format") {
    Setup s = base_setup(7);
    s.policy_name = "random";
    RunTranscript t = run_with(s, "random");

    RunTranscript back = transcript_from_string(transcript_to_string(t));
    CHECK(back.seed == t.seed);
    CHECK(back.step_budget == t.step_budget);
    CHECK(back.policy_name == t.policy_name);
    CHECK(back.policy_params == t.policy_params);
    CHECK(back.parties == t.parties);
    REQUIRE(back.records.size() == t.records.size());
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        CAPTURE(i);
        CHECK(back.records[i] == t.records[i]);
    }
    CHECK(back.outcome == t.outcome);
    CHECK(back.final_balances == t.final_balances);
    CHECK(back.final_immobilized == t.final_immobilized);
    CHECK(back.steps == t.steps);
}

TEST_CASE("corrupted runs round-trip too") {
    Setup s = base_setup(11);
    s.parties[0].corrupt_notary = CorruptNotarySpec{NotaryMisbehavior::ConsistentFalse,
                                                    Bytes{'f', 'a', 'k', 'e'}};
    RunTranscript t = run_with(s, "eager");
    REQUIRE(t.outcome == Outcome::Settled);

    RunTranscript back = transcript_from_string(transcript_to_string(t));
    CHECK(back.records == t.records);
    CHECK(back.parties == t.parties);
}

TEST_CASE("identical runs serialize to identical octets") {
    Setup s = base_setup(42);
    s.policy_name = "random";
    std::string a = transcript_to_string(run_with(s, "random"));
    std::string b = transcript_to_string(run_with(s, "random"));
    CHECK(a == b);

    Setup other = base_setup(43);
    other.policy_name = "random";
    CHECK(transcript_to_string(run_with(other, "random")) != a);
}

TEST_CASE("the recorded action stream replays the run") {
    Setup s = base_setup(99);
    s.policy_name = "random";
    RunTranscript t = run_with(s, "random");

    auto script = make_scripted_policy(extract_actions(t));
    Engine replay(s, *script);
    RunTranscript again = replay.run();

    CHECK(again.records == t.records);
    CHECK(again.outcome == t.outcome);
    CHECK(again.final_balances == t.final_balances);
    CHECK(again.final_immobilized == t.final_immobilized);
    CHECK(again.steps == t.steps);
}

TEST_CASE("save and load through a file") {
    RunTranscript t = run_with(base_setup(3), "eager");
    std::string path = temp_path("fairex_roundtrip.jsonl");
    save_transcript(t, path);
    RunTranscript back = load_transcript(path);
    CHECK(back.records == t.records);
    CHECK(back.outcome == t.outcome);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_transcript(temp_path("fairex_no_such_file.jsonl")), TranscriptError);
}

TEST_CASE("diff report lines are tolerated on load") {
    RunTranscript t = run_with(base_setup(5), "eager");
    DiffReport d = diff_real_ideal(t);
    REQUIRE(d.equivalent);

    std::string line = diff_report_line(t, d);
    CHECK(line.find("\"type\":\"diff\"") != std::string::npos);
    CHECK(line.find("real_outputs") != std::string::npos);
    CHECK(line.find("ideal_outputs") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);

    std::string text = transcript_to_string(t) + line + "\n";
    RunTranscript back = transcript_from_string(text);
    CHECK(back.records == t.records);
    CHECK(back.outcome == t.outcome);
}

TEST_CASE("malformed input is rejected with its line number") {
    RunTranscript t = run_with(base_setup(5), "eager");
    std::string good = transcript_to_string(t);

    CHECK_THROWS_WITH_AS(transcript_from_string(""), "transcript: missing header line",
                         TranscriptError);

    // header alone: a run that never reached its summary
    std::string header = good.substr(0, good.find('\n') + 1);
    CHECK_THROWS_AS(transcript_from_string(header), TranscriptError);

    CHECK_THROWS_WITH_AS(transcript_from_string("{\"type\":\"buy\"}\n"),
                         "transcript: line 1: record before header", TranscriptError);

    std::string garbage = header + "not json at all\n";
    try {
        transcript_from_string(garbage);
        FAIL("expected TranscriptError");
    } catch (const TranscriptError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::string unknown = header + "{\"type\":\"wat\"}\n";
    try {
        transcript_from_string(unknown);
        FAIL("expected TranscriptError");
    } catch (const TranscriptError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("unknown record type") != std::string::npos);
    }

    // an octet string of the wrong width inside an otherwise well-formed line
    std::string bad_hex = header +
                          "{\"type\":\"certify\",\"step\":0,\"input\":{\"tag\":\"CertifyInput\","
                          "\"sid\":{\"notary\":\"N\",\"suffix\":\"0102\"},\"seller\":\"S\","
                          "\"data\":\"00\",\"attrs\":{}}}\n";
    CHECK_THROWS_AS(transcript_from_string(bad_hex), TranscriptError);
}
