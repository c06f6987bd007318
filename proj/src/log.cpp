#include "stonediag/log.hpp"

#include "stonediag/errors.hpp"

namespace stonediag {

std::string phase_name(Phase p) {
    switch (p) {
        case Phase::Individual: return "individual";
        case Phase::Discussion: return "discussion";
        case Phase::Consensus: return "consensus";
    }
    return "individual";
}

Phase phase_from_name(const std::string& name) {
    if (name == "individual") return Phase::Individual;
    if (name == "discussion") return Phase::Discussion;
    if (name == "consensus") return Phase::Consensus;
    throw InputError("unknown phase name '" + name + "'");
}

void DiscussionLog::append(LogEntry entry) {
    if (!entries_.empty()) {
        const LogEntry& last = entries_.back();
        if (entry.seq <= last.seq)
            throw MisuseError("log: seq must increase strictly (got " +
                              std::to_string(entry.seq) + " after " + std::to_string(last.seq) +
                              ")");
        if (static_cast<int>(entry.phase) < static_cast<int>(last.phase))
            throw MisuseError("log: phase " + phase_name(entry.phase) +
                              " may not follow " + phase_name(last.phase));
        if (last.phase == Phase::Consensus && entry.phase == Phase::Consensus)
            throw MisuseError("log: at most one consensus entry per case");
    }
    entries_.push_back(std::move(entry));
}

std::string entry_content_text(const EntryContent& content) {
    if (const auto* analysis = std::get_if<StructuredAnalysis>(&content))
        return render_analysis_reply(*analysis);
    if (const auto* commentaries = std::get_if<std::vector<Commentary>>(&content))
        return render_commentary_reply(*commentaries);
    if (const auto* diagnosis = std::get_if<FinalDiagnosis>(&content)) {
        DiagnosisDraft draft;
        draft.description = diagnosis->description;
        draft.findings = diagnosis->findings;
        draft.confidence = diagnosis->confidence;
        draft.divergences_resolved = diagnosis->divergences_resolved;
        return render_diagnosis_reply(draft);
    }
    return std::get<std::string>(content);
}

} // namespace stonediag
