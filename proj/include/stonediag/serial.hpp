#pragma once

#include "stonediag/log.hpp"

#include "json.hpp"

#include <string>

namespace stonediag {

// JSON forms for persisted artifacts. Field order is fixed (ordered_json,
// insertion order) so mock-mode outputs are byte-reproducible.
using ordered_json = nlohmann::ordered_json;

ordered_json label_ref_json(const LabelRef& ref);
LabelRef label_ref_from_json(const ordered_json& j);

ordered_json finding_json(const Finding& f);
Finding finding_from_json(const ordered_json& j);

ordered_json analysis_json(const StructuredAnalysis& a);
StructuredAnalysis analysis_from_json(const ordered_json& j);

ordered_json commentary_json(const Commentary& c);
Commentary commentary_from_json(const ordered_json& j);

ordered_json diagnosis_json(const FinalDiagnosis& d);
FinalDiagnosis diagnosis_from_json(const ordered_json& j);

ordered_json log_entry_json(const LogEntry& e);
LogEntry log_entry_from_json(const ordered_json& j);

// Predictions document consumed by the evaluation command: the findings of
// one system (agentic consensus or single-shot baseline) for one case.
struct PredictionsDoc {
    std::string case_id;
    std::string system;
    std::vector<Finding> findings;

    bool operator==(const PredictionsDoc&) const = default;
};

std::string serialize_predictions(const PredictionsDoc& doc);
PredictionsDoc parse_predictions(const std::string& bytes, const std::string& origin);

std::string serialize_diagnosis(const FinalDiagnosis& d);
FinalDiagnosis parse_diagnosis_doc(const std::string& bytes, const std::string& origin);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

} // namespace stonediag
