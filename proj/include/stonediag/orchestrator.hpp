#pragma once

#include "stonediag/agents.hpp"
#include "stonediag/gateway.hpp"
#include "stonediag/log.hpp"
#include "stonediag/rag.hpp"
#include "stonediag/taxonomy.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stonediag {

// Case prompt used when the caller does not override it.
extern const char* const kDefaultCasePrompt;

struct CaseInput {
    std::string case_id;
    std::string image_path;
    std::string media_type; // image/jpeg or image/png
    std::string case_prompt; // kDefaultCasePrompt when empty
};

// Maps .png/.jpg/.jpeg to a supported media type.
std::optional<std::string> media_type_for_path(const std::string& path);

struct RunConfig {
    bool retrieval_enabled = true;
    int retrieval_k = 8;
    double specialist_temperature = 0.2;
    double coordinator_temperature = 0.0;
    int retry_limit = 1; // repair retries per malformed reply
    std::vector<std::string> phase2_order; // permutation of specialist ids; empty = roster order
    std::string model_id;
    std::optional<Effort> effort;
    std::optional<int> max_output_tokens;
};

// Streams log lines to disk as entries are appended, so whatever prefix
// exists survives a failed run. Files start with a case header line and end
// with a status trailer.
class LogFileWriter {
public:
    LogFileWriter() = default;
    void open(const std::filesystem::path& path, const std::string& case_id);
    void write_entry(const LogEntry& entry);
    void write_trailer(const std::string& status, const std::string& error);
    bool is_open() const { return static_cast<bool>(out_); }

private:
    std::unique_ptr<std::ofstream> out_;
};

struct CaseResult {
    FinalDiagnosis diagnosis;
    DiscussionLog log;
    LedgerTotals usage;
};

// Executes the three-phase workflow: parallel individual analyses appended
// in roster order, strictly sequential discussion in the configured order,
// then coordinator consensus over the full log.
class Orchestrator {
public:
    Orchestrator(Gateway& gateway, const PatternTaxonomy& taxonomy, const Roster& roster,
                 const VectorStore* store, RunConfig config);

    std::vector<StructuredAnalysis> run_individual_phase(const CaseInput& input,
                                                         DiscussionLog& log,
                                                         LogFileWriter* writer);

    std::vector<std::vector<Commentary>> run_discussion_phase(
        const CaseInput& input, const std::vector<StructuredAnalysis>& analyses,
        DiscussionLog& log, LogFileWriter* writer);

    FinalDiagnosis run_consensus_phase(const CaseInput& input, DiscussionLog& log,
                                       LogFileWriter* writer);

    // Full pipeline. When run_dir is set the log is persisted there as
    // log.jsonl, trailer included, before this function returns or throws.
    CaseResult run_case(const CaseInput& input,
                        const std::optional<std::filesystem::path>& run_dir);

    // Provenance of final findings against the phase-1 analyses: supporters
    // are specialists who reported the same canonical pattern id.
    static std::vector<std::set<std::string>> compute_provenance(
        const std::vector<Finding>& final_findings,
        const std::vector<StructuredAnalysis>& analyses);

private:
    std::string timestamp() const;
    ChatResponse complete_with_repair(const CallContext& ctx, ChatRequest request,
                                      const std::function<void(const std::string&)>& try_parse);

    Gateway& gateway_;
    const PatternTaxonomy& taxonomy_;
    const Roster& roster_;
    const VectorStore* store_;
    RunConfig config_;
};

} // namespace stonediag
