#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fairex/ideal.hpp"
#include "fairex/netsim.hpp"

namespace fairex {

struct TranscriptError : std::runtime_error {
    explicit TranscriptError(const std::string& what)
        : std::runtime_error("transcript: " + what) {}
};

// Line-delimited JSON with hexadecimal octet fields: a header line, one
// line per record, a summary line. Identical transcripts serialize to
// identical octets.
std::string transcript_to_string(const RunTranscript& t);
void save_transcript(const RunTranscript& t, const std::string& path);

// Inverse of transcript_to_string. Trailing diff-report lines are tolerated
// and skipped. Throws TranscriptError with the offending line number.
RunTranscript transcript_from_string(const std::string& text);
RunTranscript load_transcript(const std::string& path);

// One line appended by the diff tool: the verdict plus both honest output
// sequences at the point of divergence.
std::string diff_report_line(const RunTranscript& t, const DiffReport& report);

// The adversary's recorded action stream; feeding it back through a
// scripted policy reproduces the run.
std::vector<Action> extract_actions(const RunTranscript& t);

} // namespace fairex
