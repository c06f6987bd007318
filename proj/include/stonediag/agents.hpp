#pragma once

#include "stonediag/rag.hpp"
#include "stonediag/taxonomy.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace stonediag {

struct DiscussionLog; // log.hpp

struct AgentIdentity {
    std::string id;
    std::string role_name;
    std::vector<std::string> competence_areas;
    std::vector<std::string> personality_traits;
    std::string specialization_directive;
    bool is_coordinator = false;

    bool operator==(const AgentIdentity&) const = default;
};

struct ProtocolStage {
    std::string name;
    std::string instruction;
    std::vector<std::string> required_outputs;

    bool operator==(const ProtocolStage&) const = default;
};

// Ordered reasoning stages imposed on every specialist during individual
// analysis. The bundled roster ships the four-stage sequence
// ContextualAnalysis, SystematicObservation, CompatibilityAssessment,
// DiagnosticSynthesis.
struct BaseProtocol {
    std::vector<ProtocolStage> stages;

    bool operator==(const BaseProtocol&) const = default;
};

// Validated set of identities plus the shared protocol: unique ids, exactly
// one coordinator, at least one specialist.
class Roster {
public:
    static Roster from(std::vector<AgentIdentity> agents, BaseProtocol protocol);

    const std::vector<AgentIdentity>& agents() const { return agents_; }
    const BaseProtocol& protocol() const { return protocol_; }
    std::vector<const AgentIdentity*> specialists() const;
    const AgentIdentity& coordinator() const;
    const AgentIdentity* find(const std::string& id) const;

    // Resolves an agent reference by id or role name, fold-insensitively.
    const AgentIdentity* resolve(std::string_view id_or_role) const;

private:
    std::vector<AgentIdentity> agents_;
    BaseProtocol protocol_;
    std::size_t coordinator_index_ = 0;
};

Roster load_roster(std::istream& in, const std::string& origin);
Roster load_roster_file(const std::string& path);

// ---------------------------------------------------------------------------
// Structured agent outputs

struct Finding {
    LabelRef pattern;
    std::string location; // non-empty
    std::string rationale;

    bool operator==(const Finding&) const = default;
};

struct AnalysisContext {
    std::string element_type;
    std::vector<std::string> exposure; // canonical ids where recognized
    LabelRef lithology_hypothesis;

    bool operator==(const AnalysisContext&) const = default;
};

struct Zone {
    std::string zone_label;
    std::vector<std::string> phenomena;

    bool operator==(const Zone&) const = default;
};

struct StructuredAnalysis {
    std::string agent_id;
    AnalysisContext context;
    std::vector<Zone> zones;
    std::vector<Finding> findings;
    std::string synthesis; // free text kept from outside the output block

    bool operator==(const StructuredAnalysis&) const = default;
};

struct Commentary {
    std::string agent_id;
    std::string target_agent_id; // never the author
    std::vector<std::string> concordances;
    std::vector<std::string> discordances;

    bool operator==(const Commentary&) const = default;
};

enum class Confidence { High, Medium, Low };

std::string confidence_name(Confidence c);

// Coordinator reply before provenance attribution.
struct DiagnosisDraft {
    std::string description;
    std::vector<Finding> findings;
    Confidence confidence = Confidence::Low;
    std::vector<std::string> divergences_resolved;

    bool operator==(const DiagnosisDraft&) const = default;
};

// ---------------------------------------------------------------------------
// Prompt assembly. Pure functions of their inputs: identical arguments
// produce byte-identical prompts. Section markers are stable so tests can
// locate them by position.

extern const char* const kSectionIdentity;    // "### IDENTITY"
extern const char* const kSectionProtocol;    // "### PROTOCOL"
extern const char* const kSectionGrounding;   // "### GROUNDING"
extern const char* const kSectionCase;        // "### CASE"
extern const char* const kSectionOutput;      // "### OUTPUT FORMAT"
extern const char* const kSectionPeers;       // "### PEER ANALYSES"
extern const char* const kSectionLog;         // "### DISCUSSION LOG"
extern const char* const kSectionTask;        // "### TASK"
extern const char* const kNoGroundingMarker;  // "No grounding documents provided."

std::string render_individual_prompt(const AgentIdentity& identity, const BaseProtocol& protocol,
                                     const std::vector<DocumentChunk>& retrieved,
                                     const std::string& case_prompt);

// Presents every peer analysis (never the reader's own), labeled by role.
std::string render_discussion_prompt(const AgentIdentity& identity,
                                     const std::vector<StructuredAnalysis>& analyses);

// Replays the complete log, in order, for the coordinator.
std::string render_consensus_prompt(const AgentIdentity& coordinator, const DiscussionLog& log);

// Single-shot comparison arm: the bare case prompt plus the analysis output
// contract, with no identity, protocol or grounding.
std::string render_baseline_prompt(const std::string& case_prompt);

// ---------------------------------------------------------------------------
// Output blocks. Replies must end with one delimited block; prose around it
// is preserved (analysis synthesis) or ignored. The render_* functions
// produce the canonical reply form; parse(render(x)) == x for well-formed x.

extern const char* const kAnalysisOpen;   // "---ANALYSIS---"
extern const char* const kCommentaryOpen; // "---COMMENTARY---"
extern const char* const kDiagnosisOpen;  // "---DIAGNOSIS---"
extern const char* const kBlockClose;     // "---END---"

StructuredAnalysis parse_structured_analysis(const std::string& raw,
                                             const PatternTaxonomy& taxonomy,
                                             const std::string& agent_id);

std::vector<Commentary> parse_commentary(const std::string& raw, const std::string& agent_id,
                                         const Roster& roster);

DiagnosisDraft parse_diagnosis(const std::string& raw, const PatternTaxonomy& taxonomy);

std::string render_analysis_reply(const StructuredAnalysis& analysis);
std::string render_commentary_reply(const std::vector<Commentary>& commentaries);
std::string render_diagnosis_reply(const DiagnosisDraft& draft);

} // namespace stonediag
