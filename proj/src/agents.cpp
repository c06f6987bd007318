#include "stonediag/agents.hpp"

#include "stonediag/errors.hpp"
#include "stonediag/log.hpp"
#include "stonediag/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

const char* const kSectionIdentity = "### IDENTITY";
const char* const kSectionProtocol = "### PROTOCOL";
const char* const kSectionGrounding = "### GROUNDING";
const char* const kSectionCase = "### CASE";
const char* const kSectionOutput = "### OUTPUT FORMAT";
const char* const kSectionPeers = "### PEER ANALYSES";
const char* const kSectionLog = "### DISCUSSION LOG";
const char* const kSectionTask = "### TASK";
const char* const kNoGroundingMarker = "No grounding documents provided.";

const char* const kAnalysisOpen = "---ANALYSIS---";
const char* const kCommentaryOpen = "---COMMENTARY---";
const char* const kDiagnosisOpen = "---DIAGNOSIS---";
const char* const kBlockClose = "---END---";

std::string confidence_name(Confidence c) {
    switch (c) {
        case Confidence::High: return "high";
        case Confidence::Medium: return "medium";
        case Confidence::Low: return "low";
    }
    return "low";
}

// ---------------------------------------------------------------------------
// Roster

Roster Roster::from(std::vector<AgentIdentity> agents, BaseProtocol protocol) {
    Roster r;
    r.agents_ = std::move(agents);
    r.protocol_ = std::move(protocol);

    std::size_t coordinators = 0;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < r.agents_.size(); ++i) {
        const AgentIdentity& a = r.agents_[i];
        if (a.id.empty()) throw ConfigError("roster: agent id must be non-empty");
        if (!ids.insert(a.id).second) throw ConfigError("roster: duplicate agent id " + a.id);
        if (a.is_coordinator) {
            ++coordinators;
            r.coordinator_index_ = i;
        }
    }
    if (coordinators != 1)
        throw ConfigError("roster: exactly one coordinator required, found " +
                          std::to_string(coordinators));
    if (r.agents_.size() < 2)
        throw ConfigError("roster: at least one specialist plus the coordinator required");

    std::set<std::string> stage_names;
    if (r.protocol_.stages.empty()) throw ConfigError("roster: protocol has no stages");
    for (const ProtocolStage& s : r.protocol_.stages) {
        if (!stage_names.insert(s.name).second)
            throw ConfigError("roster: duplicate protocol stage " + s.name);
        if (s.instruction.empty())
            throw ConfigError("roster: stage " + s.name + " has no instruction");
        if (s.required_outputs.empty())
            throw ConfigError("roster: stage " + s.name + " lists no required outputs");
    }
    return r;
}

std::vector<const AgentIdentity*> Roster::specialists() const {
    std::vector<const AgentIdentity*> out;
    for (const AgentIdentity& a : agents_)
        if (!a.is_coordinator) out.push_back(&a);
    return out;
}

const AgentIdentity& Roster::coordinator() const { return agents_[coordinator_index_]; }

const AgentIdentity* Roster::find(const std::string& id) const {
    for (const AgentIdentity& a : agents_)
        if (a.id == id) return &a;
    return nullptr;
}

const AgentIdentity* Roster::resolve(std::string_view id_or_role) const {
    const std::string key = fold_key(id_or_role);
    for (const AgentIdentity& a : agents_)
        if (fold_key(a.id) == key || fold_key(a.role_name) == key) return &a;
    return nullptr;
}

Roster load_roster(std::istream& in, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw FileParseError(origin + ": " + e.what());
    }
    try {
        BaseProtocol protocol;
        for (const auto& stage : j.at("protocol")) {
            ProtocolStage s;
            s.name = stage.at("name").get<std::string>();
            s.instruction = stage.at("instruction").get<std::string>();
            s.required_outputs = stage.at("required_outputs").get<std::vector<std::string>>();
            protocol.stages.push_back(std::move(s));
        }
        std::vector<AgentIdentity> agents;
        for (const auto& agent : j.at("agents")) {
            AgentIdentity a;
            a.id = agent.at("id").get<std::string>();
            a.role_name = agent.at("role_name").get<std::string>();
            a.competence_areas = agent.at("competence_areas").get<std::vector<std::string>>();
            a.personality_traits =
                agent.at("personality_traits").get<std::vector<std::string>>();
            a.specialization_directive = agent.at("specialization_directive").get<std::string>();
            a.is_coordinator = agent.value("coordinator", false);
            agents.push_back(std::move(a));
        }
        return Roster::from(std::move(agents), std::move(protocol));
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw FileParseError(origin + ": " + e.what());
    }
}

Roster load_roster_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("roster: cannot open " + path);
    return load_roster(in, path);
}

// ---------------------------------------------------------------------------
// Prompt assembly

namespace {

void append_identity_card(std::string& out, const AgentIdentity& identity) {
    out += kSectionIdentity;
    out += '\n';
    out += "Agent: " + identity.id + "\n";
    out += "Role: " + identity.role_name + "\n";
    out += "Competence areas: " + join(identity.competence_areas, "; ") + "\n";
    out += "Personality traits: " + join(identity.personality_traits, "; ") + "\n";
    out += "Directive: " + identity.specialization_directive + "\n";
    out += "Reason strictly within this role; defer to colleagues outside it.\n";
}

void append_analysis_contract(std::string& out) {
    out += kSectionOutput;
    out += '\n';
    out += "Reason as needed in prose, then finish your reply with exactly one block of "
           "this form:\n";
    out += kAnalysisOpen;
    out += '\n';
    out += "element: <architectural element and its context>\n";
    out += "exposure: <comma-separated exposure factors>\n";
    out += "lithology: <most likely lithological type>\n";
    out += "zone: <zone label> | <comma-separated visible phenomena>\n";
    out += "finding: <pattern term> | <where it is present> | <one-line justification>\n";
    out += kBlockClose;
    out += '\n';
    out += "Repeat the zone: line per homogeneous zone and the finding: line per "
           "deterioration pattern. Use canonical pattern terms, never generic ones.\n";
}

} // namespace

std::string render_individual_prompt(const AgentIdentity& identity, const BaseProtocol& protocol,
                                     const std::vector<DocumentChunk>& retrieved,
                                     const std::string& case_prompt) {
    if (identity.is_coordinator)
        throw MisuseError("individual prompts are for specialists, not the coordinator");

    std::string out;
    append_identity_card(out, identity);
    out += '\n';

    out += kSectionProtocol;
    out += '\n';
    out += "Work through the stages below in order, from general to particular, from "
           "observation to interpretation. Complete each stage before the next.\n";
    int stage_no = 0;
    for (const ProtocolStage& stage : protocol.stages) {
        out += std::to_string(++stage_no) + ". " + stage.name + ": " + stage.instruction + "\n";
        out += "   Required outputs: " + join(stage.required_outputs, ", ") + "\n";
    }
    out += '\n';

    out += kSectionGrounding;
    out += '\n';
    if (retrieved.empty()) {
        out += kNoGroundingMarker;
        out += '\n';
    } else {
        out += "Anchor your terminology to the reference passages below; cite the bracketed "
               "id when you rely on one.\n";
        for (const DocumentChunk& chunk : retrieved) {
            out += "[" + chunk.chunk_id + "] " + chunk.text + "\n";
        }
    }
    out += '\n';

    out += kSectionCase;
    out += '\n';
    out += case_prompt;
    if (case_prompt.empty() || case_prompt.back() != '\n') out += '\n';
    out += '\n';

    append_analysis_contract(out);
    return out;
}

std::string render_discussion_prompt(const AgentIdentity& identity,
                                     const std::vector<StructuredAnalysis>& analyses) {
    if (identity.is_coordinator)
        throw MisuseError("discussion prompts are for specialists, not the coordinator");

    bool own_present = false;
    std::vector<const StructuredAnalysis*> peers;
    for (const StructuredAnalysis& a : analyses) {
        if (a.agent_id == identity.id) {
            own_present = true;
        } else {
            peers.push_back(&a);
        }
    }
    if (!own_present)
        throw MisuseError("discussion prompt: analyses must include " + identity.id +
                          "'s own analysis");
    if (peers.empty())
        throw MisuseError("discussion prompt: no peer analyses to comment on");

    std::string out;
    append_identity_card(out, identity);
    out += '\n';

    out += kSectionPeers;
    out += '\n';
    for (const StructuredAnalysis* peer : peers) {
        out += "--- Analysis by " + peer->agent_id + " ---\n";
        out += render_analysis_reply(*peer);
        out += '\n';
    }

    out += kSectionTask;
    out += '\n';
    out += "Read each colleague's conclusions and comment on them from their unique "
           "perspective within your own specialization: highlight concordances you can "
           "support and discordances you contest, with your reasons. Your own analysis is "
           "not repeated here; do not comment on yourself.\n";
    out += '\n';

    out += kSectionOutput;
    out += '\n';
    out += "Finish your reply with exactly one block of this form, addressing every peer "
           "once:\n";
    out += kCommentaryOpen;
    out += '\n';
    out += "peer: <agent id>\n";
    out += "agree: <specific point you concur with>\n";
    out += "disagree: <specific point you contest>\n";
    out += kBlockClose;
    out += '\n';
    out += "Repeat the peer/agree/disagree group per colleague; agree: and disagree: lines "
           "may repeat or be omitted within a group.\n";
    return out;
}

std::string render_consensus_prompt(const AgentIdentity& coordinator, const DiscussionLog& log) {
    if (!coordinator.is_coordinator)
        throw MisuseError("consensus prompts are for the coordinator");

    std::set<std::string> individual_agents;
    bool any_discussion = false;
    for (const LogEntry& e : log.entries()) {
        if (e.phase == Phase::Individual) individual_agents.insert(e.agent_id);
        if (e.phase == Phase::Discussion) any_discussion = true;
    }
    if (individual_agents.empty())
        throw PhaseOrderError("consensus requested before any individual analysis");
    if (individual_agents.size() > 1 && !any_discussion)
        throw PhaseOrderError("consensus requested before the discussion phase");

    std::string out;
    append_identity_card(out, coordinator);
    out += '\n';

    out += kSectionLog;
    out += '\n';
    for (const LogEntry& e : log.entries()) {
        out += "[" + std::to_string(e.seq) + "] " + phase_name(e.phase) + " — " + e.agent_id +
               "\n";
        out += entry_content_text(e.content);
        out += '\n';
    }

    out += kSectionTask;
    out += '\n';
    out += "You have the entire discussion log above. Synthesize the specialist analyses, "
           "resolve divergences through logical reasoning, and formulate the final "
           "integrated diagnosis. State a confidence level (high, medium, low) based on "
           "the consistency of the emerged evidence.\n";
    out += '\n';

    out += kSectionOutput;
    out += '\n';
    out += "Finish your reply with exactly one block of this form:\n";
    out += kDiagnosisOpen;
    out += '\n';
    out += "description: <concise description of the element and its overall condition>\n";
    out += "confidence: <high|medium|low>\n";
    out += "finding: <pattern term> | <where it is present> | <one-line justification>\n";
    out += "resolved: <divergence you resolved and how>\n";
    out += kBlockClose;
    out += '\n';
    out += "Repeat the finding: line per retained pattern and the resolved: line per "
           "divergence.\n";
    return out;
}

std::string render_baseline_prompt(const std::string& case_prompt) {
    std::string out;
    out += kSectionCase;
    out += '\n';
    out += case_prompt;
    if (case_prompt.empty() || case_prompt.back() != '\n') out += '\n';
    out += '\n';
    append_analysis_contract(out);
    return out;
}

// ---------------------------------------------------------------------------
// Output-block parsing

namespace {

struct Block {
    std::string before;             // prose preceding the open delimiter
    std::vector<std::string> lines; // raw lines inside the block
    std::string after;              // prose following the close delimiter
};

Block extract_block(const std::string& raw, const char* open_marker) {
    std::istringstream in(raw);
    std::string line;
    std::vector<std::string> before, inside, after;
    int state = 0; // 0 = before, 1 = inside, 2 = after
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (state == 0 && t == open_marker) {
            state = 1;
            continue;
        }
        if (state == 1 && t == kBlockClose) {
            state = 2;
            continue;
        }
        if (state == 0) before.push_back(line);
        else if (state == 1) inside.push_back(line);
        else after.push_back(line);
    }
    if (state == 0)
        throw MalformedOutputError(std::string("reply lacks the ") + open_marker +
                                   " output block");
    if (state == 1)
        throw MalformedOutputError(std::string("output block ") + open_marker +
                                   " is never closed with " + kBlockClose);
    Block b;
    b.before = trim(join(before, "\n"));
    b.lines = std::move(inside);
    b.after = trim(join(after, "\n"));
    return b;
}

// "key: value" with the key before the first colon.
std::pair<std::string, std::string> key_value(const std::string& line) {
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos)
        throw MalformedOutputError("output block line has no key: '" + trim(line) + "'");
    std::string key = fold_key(line.substr(0, colon));
    std::string value = trim(line.substr(colon + 1));
    return {std::move(key), std::move(value)};
}

// Split into exactly n fields on '|'; the final field keeps any extra pipes.
std::vector<std::string> pipe_fields(const std::string& value, std::size_t n) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t bar = value.find('|', start);
        if (bar == std::string::npos)
            throw MalformedOutputError("expected " + std::to_string(n) +
                                       " '|'-separated fields in '" + trim(value) + "'");
        out.push_back(trim(value.substr(start, bar - start)));
        start = bar + 1;
    }
    out.push_back(trim(value.substr(start)));
    return out;
}

Finding parse_finding_value(const std::string& value, const PatternTaxonomy& taxonomy) {
    const std::vector<std::string> fields = pipe_fields(value, 3);
    if (fields[0].empty()) throw MalformedOutputError("finding has an empty pattern term");
    if (fields[1].empty()) throw MalformedOutputError("finding has an empty location");
    Finding f;
    f.pattern = taxonomy.normalize(fields[0]);
    f.location = fields[1];
    f.rationale = fields[2];
    return f;
}

} // namespace

StructuredAnalysis parse_structured_analysis(const std::string& raw,
                                             const PatternTaxonomy& taxonomy,
                                             const std::string& agent_id) {
    const Block block = extract_block(raw, kAnalysisOpen);

    StructuredAnalysis a;
    a.agent_id = agent_id;
    bool have_element = false, have_exposure = false, have_lithology = false;

    for (const std::string& line : block.lines) {
        if (trim(line).empty()) continue;
        auto [key, value] = key_value(line);
        if (key == "element") {
            if (have_element) throw MalformedOutputError("duplicate element: line");
            if (value.empty()) throw MalformedOutputError("element: must not be empty");
            a.context.element_type = value;
            have_element = true;
        } else if (key == "exposure") {
            if (have_exposure) throw MalformedOutputError("duplicate exposure: line");
            for (const std::string& item : split_trimmed(value, ',')) {
                const LabelRef ref = normalize_exposure(item);
                a.context.exposure.push_back(ref.known ? ref.value : item);
            }
            have_exposure = true;
        } else if (key == "lithology") {
            if (have_lithology) throw MalformedOutputError("duplicate lithology: line");
            if (value.empty()) throw MalformedOutputError("lithology: must not be empty");
            a.context.lithology_hypothesis = normalize_lithology(value);
            have_lithology = true;
        } else if (key == "zone") {
            const std::vector<std::string> fields = pipe_fields(value, 2);
            if (fields[0].empty()) throw MalformedOutputError("zone has an empty label");
            Zone z;
            z.zone_label = fields[0];
            z.phenomena = split_trimmed(fields[1], ',');
            a.zones.push_back(std::move(z));
        } else if (key == "finding") {
            a.findings.push_back(parse_finding_value(value, taxonomy));
        } else {
            throw MalformedOutputError("unexpected key '" + key + "' in analysis block");
        }
    }
    if (!have_element) throw MalformedOutputError("analysis block lacks the element: line");
    if (!have_exposure) throw MalformedOutputError("analysis block lacks the exposure: line");
    if (!have_lithology) throw MalformedOutputError("analysis block lacks the lithology: line");

    a.synthesis = block.before;
    if (!block.after.empty()) {
        if (!a.synthesis.empty()) a.synthesis += '\n';
        a.synthesis += block.after;
    }
    return a;
}

std::vector<Commentary> parse_commentary(const std::string& raw, const std::string& agent_id,
                                         const Roster& roster) {
    const Block block = extract_block(raw, kCommentaryOpen);

    std::vector<Commentary> out;
    std::set<std::string> targets;
    Commentary* current = nullptr;

    for (const std::string& line : block.lines) {
        if (trim(line).empty()) continue;
        auto [key, value] = key_value(line);
        if (key == "peer") {
            const AgentIdentity* target = roster.resolve(value);
            if (!target)
                throw MalformedOutputError("commentary addresses unknown agent '" + value + "'");
            if (target->id == agent_id)
                throw MalformedOutputError("commentary must not address its own author");
            if (!targets.insert(target->id).second)
                throw MalformedOutputError("commentary addresses " + target->id + " twice");
            Commentary c;
            c.agent_id = agent_id;
            c.target_agent_id = target->id;
            out.push_back(std::move(c));
            current = &out.back();
        } else if (key == "agree" || key == "disagree") {
            if (!current)
                throw MalformedOutputError("'" + key + ":' line before any peer: line");
            if (value.empty()) throw MalformedOutputError("'" + key + ":' line is empty");
            if (key == "agree") current->concordances.push_back(value);
            else current->discordances.push_back(value);
        } else {
            throw MalformedOutputError("unexpected key '" + key + "' in commentary block");
        }
    }
    return out;
}

DiagnosisDraft parse_diagnosis(const std::string& raw, const PatternTaxonomy& taxonomy) {
    const Block block = extract_block(raw, kDiagnosisOpen);

    DiagnosisDraft d;
    bool have_confidence = false, have_description = false;
    for (const std::string& line : block.lines) {
        if (trim(line).empty()) continue;
        auto [key, value] = key_value(line);
        if (key == "description") {
            if (have_description) throw MalformedOutputError("duplicate description: line");
            d.description = value;
            have_description = true;
        } else if (key == "confidence") {
            if (have_confidence) throw MalformedOutputError("duplicate confidence: line");
            const std::string level = fold_key(value);
            if (level == "high") d.confidence = Confidence::High;
            else if (level == "medium") d.confidence = Confidence::Medium;
            else if (level == "low") d.confidence = Confidence::Low;
            else
                throw MalformedOutputError("confidence must be high, medium or low, got '" +
                                           value + "'");
            have_confidence = true;
        } else if (key == "finding") {
            d.findings.push_back(parse_finding_value(value, taxonomy));
        } else if (key == "resolved") {
            if (value.empty()) throw MalformedOutputError("resolved: line is empty");
            d.divergences_resolved.push_back(value);
        } else {
            throw MalformedOutputError("unexpected key '" + key + "' in diagnosis block");
        }
    }
    if (!have_description && !block.before.empty()) d.description = block.before;
    if (!have_confidence)
        throw MalformedOutputError("diagnosis block lacks the confidence: line");
    return d;
}

// ---------------------------------------------------------------------------
// Canonical reply rendering

std::string render_analysis_reply(const StructuredAnalysis& analysis) {
    std::string out;
    if (!analysis.synthesis.empty()) {
        out += analysis.synthesis;
        out += "\n\n";
    }
    out += kAnalysisOpen;
    out += '\n';
    out += "element: " + analysis.context.element_type + "\n";
    out += "exposure: " + join(analysis.context.exposure, ", ") + "\n";
    out += "lithology: " + analysis.context.lithology_hypothesis.value + "\n";
    for (const Zone& z : analysis.zones)
        out += "zone: " + z.zone_label + " | " + join(z.phenomena, ", ") + "\n";
    for (const Finding& f : analysis.findings)
        out += "finding: " + f.pattern.value + " | " + f.location + " | " + f.rationale + "\n";
    out += kBlockClose;
    out += '\n';
    return out;
}

std::string render_commentary_reply(const std::vector<Commentary>& commentaries) {
    std::string out;
    out += kCommentaryOpen;
    out += '\n';
    for (const Commentary& c : commentaries) {
        out += "peer: " + c.target_agent_id + "\n";
        for (const std::string& s : c.concordances) out += "agree: " + s + "\n";
        for (const std::string& s : c.discordances) out += "disagree: " + s + "\n";
    }
    out += kBlockClose;
    out += '\n';
    return out;
}

std::string render_diagnosis_reply(const DiagnosisDraft& draft) {
    std::string out;
    out += kDiagnosisOpen;
    out += '\n';
    out += "description: " + draft.description + "\n";
    out += "confidence: " + confidence_name(draft.confidence) + "\n";
    for (const Finding& f : draft.findings)
        out += "finding: " + f.pattern.value + " | " + f.location + " | " + f.rationale + "\n";
    for (const std::string& s : draft.divergences_resolved) out += "resolved: " + s + "\n";
    out += kBlockClose;
    out += '\n';
    return out;
}

} // namespace stonediag
