#pragma once

#include "stonediag/agents.hpp"
#include "stonediag/gateway.hpp"

#include <set>
#include <string>
#include <variant>
#include <vector>

namespace stonediag {

enum class Phase { Individual, Discussion, Consensus };

std::string phase_name(Phase p);
Phase phase_from_name(const std::string& name);

// Coordinator synthesis with provenance: per finding, the specialists whose
// individual analyses reported the same canonical pattern. An empty set
// marks a coordinator-added finding.
struct FinalDiagnosis {
    std::string case_id;
    std::string description;
    std::vector<Finding> findings;
    Confidence confidence = Confidence::Low;
    std::vector<std::set<std::string>> provenance; // aligned with findings
    std::vector<std::string> divergences_resolved;

    bool operator==(const FinalDiagnosis&) const = default;
};

using EntryContent =
    std::variant<StructuredAnalysis, std::vector<Commentary>, FinalDiagnosis, std::string>;

struct LogEntry {
    int seq = 0; // strictly increasing, 1-based
    Phase phase = Phase::Individual;
    std::string agent_id;
    EntryContent content;
    Usage usage;
    std::string timestamp; // zeroed epoch under deterministic backends
};

// Ordered, phase-tagged record of every utterance in a case run. append()
// enforces the sequencing invariants: seq strictly increasing, phases
// non-decreasing, at most one consensus entry.
class DiscussionLog {
public:
    DiscussionLog() = default;
    explicit DiscussionLog(std::string case_id) : case_id_(std::move(case_id)) {}

    const std::string& case_id() const { return case_id_; }
    const std::vector<LogEntry>& entries() const { return entries_; }

    void append(LogEntry entry);
    int next_seq() const { return static_cast<int>(entries_.size()) + 1; }

private:
    std::string case_id_;
    std::vector<LogEntry> entries_;
};

// Canonical text form of an entry's content, used when the log is replayed
// into the consensus prompt and when entries are persisted.
std::string entry_content_text(const EntryContent& content);

} // namespace stonediag
