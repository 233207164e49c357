#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fairex/harness.hpp"
#include "fairex/policies.hpp"
#include "fairex/transcript.hpp"

using namespace fairex;

namespace {

std::string balances_display(const std::map<PartyId, TokenCount>& b) {
    std::string out;
    for (const auto& [id, amount] : b) {
        if (!out.empty()) out += " ";
        out += id + "=" + std::to_string(amount);
    }
    return out;
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed,
            std::string out_path) {
    Scenario sc = load_scenario(scenario_path);
    RunTranscript t = run_scenario(sc, seed);
    if (out_path.empty())
        out_path = std::filesystem::path(scenario_path).stem().string() + ".transcript";
    save_transcript(t, out_path);
    std::cout << outcome_name(t.outcome) << " after " << t.steps << " steps; "
              << balances_display(t.final_balances);
    if (t.final_immobilized != 0) std::cout << " immobilized=" << t.final_immobilized;
    std::cout << "; transcript: " << out_path << "\n";
    return outcome_exit_code(t.outcome);
}

int cmd_diff(const std::string& transcript_path) {
    RunTranscript t = load_transcript(transcript_path);
    DiffReport d = diff_real_ideal(t);
    {
        std::ofstream f(transcript_path, std::ios::app | std::ios::binary);
        if (!f) throw TranscriptError("cannot append to " + transcript_path);
        f << diff_report_line(t, d) << '\n';
    }
    if (d.unmappable) {
        std::cout << "UNMAPPABLE: " << d.detail << "\n";
        return kExitUnmappable;
    }
    if (!d.equivalent) {
        std::cout << "FAIL: " << d.detail << "\n";
        return kExitDivergence;
    }
    std::cout << "PASS: run is equivalent to the ideal exchange\n";
    return 0;
}

int cmd_fuzz(const std::string& scenario_path, const std::string& policies_csv,
             std::uint64_t count) {
    Scenario sc = load_scenario(scenario_path);
    std::vector<std::string> policies;
    std::istringstream is(policies_csv);
    for (std::string name; std::getline(is, name, ',');)
        if (!name.empty()) policies.push_back(name);
    if (policies.empty()) throw std::invalid_argument("no policies given");

    std::map<std::string, std::uint64_t> outcomes;
    std::uint64_t runs = 0;
    for (const std::string& policy : policies) {
        Scenario variant = sc;
        variant.setup.policy_name = policy;
        for (std::uint64_t i = 0; i < count; ++i) {
            RunTranscript t = run_scenario(variant, sc.setup.seed + i);
            ++runs;
            CheckResult fair = check_fairness(t);
            if (!fair.ok) {
                std::cout << "FAIL: policy " << policy << " seed " << t.seed
                          << ": fairness: " << fair.detail << "\n";
                return kExitDivergence;
            }
            CheckResult cons = check_conservation(t);
            if (!cons.ok) {
                std::cout << "FAIL: policy " << policy << " seed " << t.seed
                          << ": conservation: " << cons.detail << "\n";
                return kExitDivergence;
            }
            ++outcomes[outcome_name(t.outcome)];
        }
    }
    std::cout << "PASS: " << runs << " runs fair and conserving;";
    for (const auto& [name, n] : outcomes) std::cout << " " << name << "=" << n;
    std::cout << "\n";
    return 0;
}

int cmd_ls_policies() {
    for (const std::string& name : policy_names()) std::cout << name << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulator for notarized fair exchange"};
    app.require_subcommand(1);

    std::string scenario_path, transcript_path, out_path, policies = "random";
    std::optional<std::uint64_t> seed;
    std::uint64_t count = 100;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write its transcript");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--out", out_path, "transcript path (default: <scenario stem>.transcript)");

    CLI::App* diff = app.add_subcommand(
        "diff", "compare a transcript against the ideal exchange; append the report to the file");
    diff->add_option("transcript", transcript_path, "transcript file")->required();

    CLI::App* fuzz = app.add_subcommand("fuzz", "run many seeds and check chain-level soundness");
    fuzz->add_option("scenario", scenario_path, "scenario file")->required();
    fuzz->add_option("--policies", policies, "comma-separated adversary policies");
    fuzz->add_option("--count", count, "seeds per policy");

    CLI::App* ls = app.add_subcommand("ls-policies", "list adversary policies");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, seed, out_path);
        if (diff->parsed()) return cmd_diff(transcript_path);
        if (fuzz->parsed()) return cmd_fuzz(scenario_path, policies, count);
        if (ls->parsed()) return cmd_ls_policies();
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
