#include "stonediag/serial.hpp"

#include "stonediag/errors.hpp"

#include <fstream>
#include <sstream>

namespace stonediag {

ordered_json label_ref_json(const LabelRef& ref) {
    ordered_json j;
    j["value"] = ref.value;
    j["known"] = ref.known;
    return j;
}

LabelRef label_ref_from_json(const ordered_json& j) {
    return {j.at("value").get<std::string>(), j.at("known").get<bool>()};
}

ordered_json finding_json(const Finding& f) {
    ordered_json j;
    j["pattern"] = f.pattern.value;
    j["known"] = f.pattern.known;
    j["location"] = f.location;
    j["rationale"] = f.rationale;
    return j;
}

Finding finding_from_json(const ordered_json& j) {
    Finding f;
    f.pattern = {j.at("pattern").get<std::string>(), j.at("known").get<bool>()};
    f.location = j.at("location").get<std::string>();
    f.rationale = j.at("rationale").get<std::string>();
    return f;
}

ordered_json analysis_json(const StructuredAnalysis& a) {
    ordered_json j;
    j["agent_id"] = a.agent_id;
    ordered_json ctx;
    ctx["element_type"] = a.context.element_type;
    ctx["exposure"] = a.context.exposure;
    ctx["lithology"] = label_ref_json(a.context.lithology_hypothesis);
    j["context"] = std::move(ctx);
    j["zones"] = ordered_json::array();
    for (const Zone& z : a.zones)
        j["zones"].push_back({{"zone_label", z.zone_label}, {"phenomena", z.phenomena}});
    j["findings"] = ordered_json::array();
    for (const Finding& f : a.findings) j["findings"].push_back(finding_json(f));
    j["synthesis"] = a.synthesis;
    return j;
}

StructuredAnalysis analysis_from_json(const ordered_json& j) {
    StructuredAnalysis a;
    a.agent_id = j.at("agent_id").get<std::string>();
    const auto& ctx = j.at("context");
    a.context.element_type = ctx.at("element_type").get<std::string>();
    a.context.exposure = ctx.at("exposure").get<std::vector<std::string>>();
    a.context.lithology_hypothesis = label_ref_from_json(ctx.at("lithology"));
    for (const auto& z : j.at("zones")) {
        Zone zone;
        zone.zone_label = z.at("zone_label").get<std::string>();
        zone.phenomena = z.at("phenomena").get<std::vector<std::string>>();
        a.zones.push_back(std::move(zone));
    }
    for (const auto& f : j.at("findings")) a.findings.push_back(finding_from_json(f));
    a.synthesis = j.at("synthesis").get<std::string>();
    return a;
}

ordered_json commentary_json(const Commentary& c) {
    ordered_json j;
    j["agent_id"] = c.agent_id;
    j["target_agent_id"] = c.target_agent_id;
    j["concordances"] = c.concordances;
    j["discordances"] = c.discordances;
    return j;
}

Commentary commentary_from_json(const ordered_json& j) {
    Commentary c;
    c.agent_id = j.at("agent_id").get<std::string>();
    c.target_agent_id = j.at("target_agent_id").get<std::string>();
    c.concordances = j.at("concordances").get<std::vector<std::string>>();
    c.discordances = j.at("discordances").get<std::vector<std::string>>();
    return c;
}

ordered_json diagnosis_json(const FinalDiagnosis& d) {
    ordered_json j;
    j["case_id"] = d.case_id;
    j["description"] = d.description;
    j["confidence"] = confidence_name(d.confidence);
    j["findings"] = ordered_json::array();
    for (std::size_t i = 0; i < d.findings.size(); ++i) {
        ordered_json f = finding_json(d.findings[i]);
        std::vector<std::string> supporters;
        if (i < d.provenance.size())
            supporters.assign(d.provenance[i].begin(), d.provenance[i].end());
        f["supported_by"] = supporters;
        f["coordinator_added"] = supporters.empty();
        j["findings"].push_back(std::move(f));
    }
    j["divergences_resolved"] = d.divergences_resolved;
    return j;
}

FinalDiagnosis diagnosis_from_json(const ordered_json& j) {
    FinalDiagnosis d;
    d.case_id = j.at("case_id").get<std::string>();
    d.description = j.at("description").get<std::string>();
    const std::string level = j.at("confidence").get<std::string>();
    if (level == "high") d.confidence = Confidence::High;
    else if (level == "medium") d.confidence = Confidence::Medium;
    else if (level == "low") d.confidence = Confidence::Low;
    else throw InputError("diagnosis: unknown confidence '" + level + "'");
    for (const auto& f : j.at("findings")) {
        d.findings.push_back(finding_from_json(f));
        const auto supporters = f.at("supported_by").get<std::vector<std::string>>();
        d.provenance.emplace_back(supporters.begin(), supporters.end());
    }
    d.divergences_resolved = j.at("divergences_resolved").get<std::vector<std::string>>();
    return d;
}

ordered_json log_entry_json(const LogEntry& e) {
    ordered_json j;
    j["seq"] = e.seq;
    j["phase"] = phase_name(e.phase);
    j["agent_id"] = e.agent_id;
    ordered_json content;
    if (const auto* analysis = std::get_if<StructuredAnalysis>(&e.content)) {
        content["type"] = "analysis";
        content["analysis"] = analysis_json(*analysis);
    } else if (const auto* commentaries = std::get_if<std::vector<Commentary>>(&e.content)) {
        content["type"] = "commentaries";
        content["items"] = ordered_json::array();
        for (const Commentary& c : *commentaries) content["items"].push_back(commentary_json(c));
    } else if (const auto* diagnosis = std::get_if<FinalDiagnosis>(&e.content)) {
        content["type"] = "diagnosis";
        content["diagnosis"] = diagnosis_json(*diagnosis);
    } else {
        content["type"] = "text";
        content["text"] = std::get<std::string>(e.content);
    }
    j["content"] = std::move(content);
    j["usage"] = {{"prompt_tokens", e.usage.prompt_tokens},
                  {"completion_tokens", e.usage.completion_tokens}};
    j["timestamp"] = e.timestamp;
    return j;
}

LogEntry log_entry_from_json(const ordered_json& j) {
    LogEntry e;
    e.seq = j.at("seq").get<int>();
    e.phase = phase_from_name(j.at("phase").get<std::string>());
    e.agent_id = j.at("agent_id").get<std::string>();
    const auto& content = j.at("content");
    const std::string type = content.at("type").get<std::string>();
    if (type == "analysis") {
        e.content = analysis_from_json(content.at("analysis"));
    } else if (type == "commentaries") {
        std::vector<Commentary> items;
        for (const auto& c : content.at("items")) items.push_back(commentary_from_json(c));
        e.content = std::move(items);
    } else if (type == "diagnosis") {
        e.content = diagnosis_from_json(content.at("diagnosis"));
    } else if (type == "text") {
        e.content = content.at("text").get<std::string>();
    } else {
        throw InputError("log entry: unknown content type '" + type + "'");
    }
    e.usage.prompt_tokens = j.at("usage").at("prompt_tokens").get<long long>();
    e.usage.completion_tokens = j.at("usage").at("completion_tokens").get<long long>();
    e.timestamp = j.at("timestamp").get<std::string>();
    return e;
}

std::string serialize_predictions(const PredictionsDoc& doc) {
    ordered_json j;
    j["case_id"] = doc.case_id;
    j["system"] = doc.system;
    j["findings"] = ordered_json::array();
    for (const Finding& f : doc.findings) j["findings"].push_back(finding_json(f));
    return j.dump(2) + "\n";
}

PredictionsDoc parse_predictions(const std::string& bytes, const std::string& origin) {
    try {
        const ordered_json j = ordered_json::parse(bytes);
        PredictionsDoc doc;
        doc.case_id = j.at("case_id").get<std::string>();
        doc.system = j.at("system").get<std::string>();
        for (const auto& f : j.at("findings")) doc.findings.push_back(finding_from_json(f));
        return doc;
    } catch (const std::exception& e) {
        throw FileParseError(origin + ": " + e.what());
    }
}

std::string serialize_diagnosis(const FinalDiagnosis& d) {
    return diagnosis_json(d).dump(2) + "\n";
}

FinalDiagnosis parse_diagnosis_doc(const std::string& bytes, const std::string& origin) {
    try {
        return diagnosis_from_json(ordered_json::parse(bytes));
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw FileParseError(origin + ": " + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << bytes;
    if (!out) throw InputError("write failed for " + path);
}

} // namespace stonediag
