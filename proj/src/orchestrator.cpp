#include "stonediag/orchestrator.hpp"

#include "stonediag/errors.hpp"
#include "stonediag/serial.hpp"
#include "stonediag/text.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <future>

namespace stonediag {

const char* const kDefaultCasePrompt =
    "I would like you to analyze this image. I would like the output to be very concise "
    "and include the following points:\n"
    "\n"
    "A. A brief description of the element and its context and, if feasible, the "
    "identification of the most likely lithological type.\n"
    "B. Identification, in bullet form, of the deterioration patterns you can identify.\n"
    "\n"
    "For better identification, indicate in each bullet where the respective pattern is "
    "present. At this stage, it is not necessary to present a discussion of the results "
    "or comments on the genesis of the patterns.\n";

std::optional<std::string> media_type_for_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos) return std::nullopt;
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == "png") return "image/png";
    if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// LogFileWriter

void LogFileWriter::open(const std::filesystem::path& path, const std::string& case_id) {
    out_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*out_) throw InputError("log: cannot write " + path.string());
    ordered_json header;
    header["case_id"] = case_id;
    *out_ << header.dump() << '\n';
    out_->flush();
}

void LogFileWriter::write_entry(const LogEntry& entry) {
    *out_ << log_entry_json(entry).dump() << '\n';
    out_->flush();
}

void LogFileWriter::write_trailer(const std::string& status, const std::string& error) {
    ordered_json trailer;
    trailer["status"] = status;
    if (!error.empty()) trailer["error"] = error;
    *out_ << trailer.dump() << '\n';
    out_->flush();
}

// ---------------------------------------------------------------------------
// Orchestrator

Orchestrator::Orchestrator(Gateway& gateway, const PatternTaxonomy& taxonomy,
                           const Roster& roster, const VectorStore* store, RunConfig config)
    : gateway_(gateway), taxonomy_(taxonomy), roster_(roster), store_(store),
      config_(std::move(config)) {
    const auto specialists = roster_.specialists();
    if (config_.phase2_order.empty()) {
        for (const AgentIdentity* s : specialists) config_.phase2_order.push_back(s->id);
    } else {
        std::vector<std::string> expected, given = config_.phase2_order;
        for (const AgentIdentity* s : specialists) expected.push_back(s->id);
        std::sort(expected.begin(), expected.end());
        std::sort(given.begin(), given.end());
        if (expected != given)
            throw ConfigError("phase-2 order must be a permutation of the specialist ids");
    }
    if (config_.retrieval_enabled && config_.retrieval_k < 1)
        throw ConfigError("retrieval k must be >= 1");
}

std::string Orchestrator::timestamp() const {
    if (gateway_.deterministic()) return "1970-01-01T00:00:00Z";
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ChatResponse Orchestrator::complete_with_repair(
    const CallContext& ctx, ChatRequest request,
    const std::function<void(const std::string&)>& try_parse) {
    ChatResponse response = gateway_.complete(ctx, request);
    for (int attempt = 0;; ++attempt) {
        try {
            try_parse(response.text);
            return response;
        } catch (const MalformedOutputError& e) {
            if (attempt >= config_.retry_limit) throw;
            // One bounded repair round: echo the reply and the parse error back.
            request.messages.push_back({Role::Assistant, {TextPart{response.text}}});
            request.messages.push_back(
                {Role::User,
                 {TextPart{std::string("Your reply could not be parsed: ") + e.what() +
                           "\nResend your full reply with a corrected output block."}}});
            response = gateway_.complete(ctx, request);
        }
    }
}

namespace {

std::string load_image_base64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("image: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return base64_encode(bytes);
}

} // namespace

std::vector<StructuredAnalysis> Orchestrator::run_individual_phase(const CaseInput& input,
                                                                   DiscussionLog& log,
                                                                   LogFileWriter* writer) {
    const std::string case_prompt =
        input.case_prompt.empty() ? kDefaultCasePrompt : input.case_prompt;
    const std::string image_b64 = load_image_base64(input.image_path);
    if (input.media_type != "image/png" && input.media_type != "image/jpeg")
        throw InputError("unsupported media type '" + input.media_type + "'");

    const auto specialists = roster_.specialists();

    struct AgentOutcome {
        StructuredAnalysis analysis;
        Usage usage;
    };

    auto run_agent = [&](const AgentIdentity& identity) -> AgentOutcome {
        std::vector<DocumentChunk> retrieved;
        if (config_.retrieval_enabled && store_ != nullptr && store_->size() > 0) {
            const std::string qtext = build_query_text(identity, case_prompt);
            const std::vector<double> qvec = gateway_.embed_text(qtext);
            for (ScoredChunk& hit : query(*store_, qvec, config_.retrieval_k))
                retrieved.push_back(std::move(hit.entry.chunk));
        }
        const std::string prompt =
            render_individual_prompt(identity, roster_.protocol(), retrieved, case_prompt);

        ChatRequest request;
        request.model_id = config_.model_id;
        request.temperature = config_.specialist_temperature;
        request.effort = config_.effort;
        request.max_output_tokens = config_.max_output_tokens;
        request.messages.push_back(
            {Role::User, {TextPart{prompt}, ImagePart{input.media_type, image_b64}}});

        const CallContext ctx{input.case_id, identity.id, "individual"};
        StructuredAnalysis parsed;
        const ChatResponse response =
            complete_with_repair(ctx, std::move(request), [&](const std::string& text) {
                parsed = parse_structured_analysis(text, taxonomy_, identity.id);
            });
        return {std::move(parsed), response.usage};
    };

    // Requests run concurrently, at most one per specialist; the log is
    // appended strictly in roster order so completion order cannot leak
    // into the persisted artifacts.
    std::vector<std::future<AgentOutcome>> futures;
    futures.reserve(specialists.size());
    for (const AgentIdentity* identity : specialists)
        futures.push_back(std::async(std::launch::async, run_agent, std::cref(*identity)));

    std::vector<StructuredAnalysis> analyses;
    std::optional<std::pair<std::string, std::string>> failure; // agent, cause
    for (std::size_t i = 0; i < specialists.size(); ++i) {
        try {
            AgentOutcome outcome = futures[i].get();
            if (!failure) {
                LogEntry entry;
                entry.seq = log.next_seq();
                entry.phase = Phase::Individual;
                entry.agent_id = specialists[i]->id;
                entry.content = outcome.analysis;
                entry.usage = outcome.usage;
                entry.timestamp = timestamp();
                if (writer && writer->is_open()) writer->write_entry(entry);
                log.append(std::move(entry));
                analyses.push_back(std::move(outcome.analysis));
            }
        } catch (const std::exception& e) {
            if (!failure) failure = {specialists[i]->id, e.what()};
        }
    }
    if (failure)
        throw PhaseFailureError(failure->first, "individual phase failed for agent " +
                                                    failure->first + ": " + failure->second);
    return analyses;
}

std::vector<std::vector<Commentary>> Orchestrator::run_discussion_phase(
    const CaseInput& input, const std::vector<StructuredAnalysis>& analyses, DiscussionLog& log,
    LogFileWriter* writer) {
    std::vector<std::vector<Commentary>> all;
    if (roster_.specialists().size() < 2) return all; // nothing to discuss

    for (const std::string& agent_id : config_.phase2_order) {
        const AgentIdentity* identity = roster_.find(agent_id);
        if (!identity) throw ConfigError("phase-2 order names unknown agent " + agent_id);
        const std::string prompt = render_discussion_prompt(*identity, analyses);

        ChatRequest request;
        request.model_id = config_.model_id;
        request.temperature = config_.specialist_temperature;
        request.effort = config_.effort;
        request.max_output_tokens = config_.max_output_tokens;
        request.messages.push_back({Role::User, {TextPart{prompt}}});

        const CallContext ctx{input.case_id, identity->id, "discussion"};
        std::vector<Commentary> parsed;
        ChatResponse response;
        try {
            response = complete_with_repair(ctx, std::move(request), [&](const std::string& text) {
                parsed = parse_commentary(text, identity->id, roster_);
            });
        } catch (const std::exception& e) {
            throw PhaseFailureError(identity->id, "discussion phase failed for agent " +
                                                      identity->id + ": " + e.what());
        }

        LogEntry entry;
        entry.seq = log.next_seq();
        entry.phase = Phase::Discussion;
        entry.agent_id = identity->id;
        entry.content = parsed;
        entry.usage = response.usage;
        entry.timestamp = timestamp();
        if (writer && writer->is_open()) writer->write_entry(entry);
        log.append(std::move(entry));
        all.push_back(std::move(parsed));
    }
    return all;
}

std::vector<std::set<std::string>> Orchestrator::compute_provenance(
    const std::vector<Finding>& final_findings, const std::vector<StructuredAnalysis>& analyses) {
    std::vector<std::set<std::string>> provenance(final_findings.size());
    for (std::size_t i = 0; i < final_findings.size(); ++i) {
        const Finding& f = final_findings[i];
        if (!f.pattern.known) continue; // unknown terms cannot match; coordinator-added
        for (const StructuredAnalysis& a : analyses) {
            for (const Finding& candidate : a.findings) {
                if (candidate.pattern.known && candidate.pattern.value == f.pattern.value) {
                    provenance[i].insert(a.agent_id);
                    break;
                }
            }
        }
    }
    return provenance;
}

FinalDiagnosis Orchestrator::run_consensus_phase(const CaseInput& input, DiscussionLog& log,
                                                 LogFileWriter* writer) {
    const AgentIdentity& coordinator = roster_.coordinator();
    const std::string prompt = render_consensus_prompt(coordinator, log);

    ChatRequest request;
    request.model_id = config_.model_id;
    request.temperature = config_.coordinator_temperature;
    request.effort = config_.effort;
    request.max_output_tokens = config_.max_output_tokens;
    request.messages.push_back({Role::User, {TextPart{prompt}}});

    const CallContext ctx{input.case_id, coordinator.id, "consensus"};
    DiagnosisDraft draft;
    ChatResponse response;
    try {
        response = complete_with_repair(ctx, std::move(request), [&](const std::string& text) {
            draft = parse_diagnosis(text, taxonomy_);
        });
    } catch (const std::exception& e) {
        throw PhaseFailureError(coordinator.id, "consensus phase failed: " + std::string(e.what()));
    }

    std::vector<StructuredAnalysis> analyses;
    for (const LogEntry& e : log.entries())
        if (e.phase == Phase::Individual)
            if (const auto* a = std::get_if<StructuredAnalysis>(&e.content))
                analyses.push_back(*a);

    FinalDiagnosis diagnosis;
    diagnosis.case_id = input.case_id;
    diagnosis.description = draft.description;
    diagnosis.findings = draft.findings;
    diagnosis.confidence = draft.confidence;
    diagnosis.divergences_resolved = draft.divergences_resolved;
    diagnosis.provenance = compute_provenance(diagnosis.findings, analyses);

    LogEntry entry;
    entry.seq = log.next_seq();
    entry.phase = Phase::Consensus;
    entry.agent_id = coordinator.id;
    entry.content = diagnosis;
    entry.usage = response.usage;
    entry.timestamp = timestamp();
    if (writer && writer->is_open()) writer->write_entry(entry);
    log.append(std::move(entry));
    return diagnosis;
}

CaseResult Orchestrator::run_case(const CaseInput& input,
                                  const std::optional<std::filesystem::path>& run_dir) {
    DiscussionLog log(input.case_id);
    LogFileWriter writer;
    if (run_dir) {
        std::filesystem::create_directories(*run_dir);
        writer.open(*run_dir / "log.jsonl", input.case_id);
    }

    try {
        const auto analyses = run_individual_phase(input, log, &writer);
        run_discussion_phase(input, analyses, log, &writer);
        FinalDiagnosis diagnosis = run_consensus_phase(input, log, &writer);
        if (writer.is_open()) writer.write_trailer("complete", "");
        return {std::move(diagnosis), std::move(log), gateway_.ledger().totals_for_case(input.case_id)};
    } catch (const std::exception& e) {
        if (writer.is_open()) writer.write_trailer("incomplete", e.what());
        throw;
    }
}

} // namespace stonediag
