#pragma once

#include "stonediag/agents.hpp"
#include "stonediag/taxonomy.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stonediag {

struct GroundTruthCase {
    std::string case_id;
    std::string image; // file reference, informational
    std::vector<std::string> expected; // canonical ids, no duplicates
    std::string notes;

    bool operator==(const GroundTruthCase&) const = default;
};

// Corpus file: one JSON object per line {case_id, image, expected, notes}.
// Every expected id must exist in the taxonomy; duplicates rejected.
std::vector<GroundTruthCase> load_ground_truth(std::istream& in, const std::string& origin,
                                               const PatternTaxonomy& taxonomy);
std::vector<GroundTruthCase> load_ground_truth_file(const std::string& path,
                                                    const PatternTaxonomy& taxonomy);
std::string save_ground_truth(const std::vector<GroundTruthCase>& cases);

struct TpPair {
    std::size_t prediction_index;
    std::string truth_id;

    bool operator==(const TpPair&) const = default;
};

struct MatchOutcome {
    std::string case_id;
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long ambiguous = 0;
    std::vector<TpPair> pairs;                      // one per TP
    std::vector<std::size_t> unmatched_predictions; // FP indices
    std::vector<std::size_t> ambiguous_predictions; // excluded from metrics
    std::vector<std::string> unmatched_truths;      // FN ids
};

// Deterministic greedy matching in prediction order. Exact canonical-id
// equality against an unconsumed truth is a TP and consumes it; failing
// that, a declared partial overlap with an unconsumed truth (either
// direction) is Ambiguous and consumes nothing; everything else, including
// unknown terms, is an FP. Truths left unconsumed are FNs.
MatchOutcome match_findings(const std::vector<Finding>& predictions,
                            const GroundTruthCase& truth, const PatternTaxonomy& taxonomy);

// Exact rational metric value. Undefined when the denominator is zero;
// undefined never renders as 0 or 100.
struct Metric {
    bool defined = false;
    long long num = 0;
    long long den = 1;

    double value() const { return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
    // Per-mille (one decimal of a percent), rounded half-even.
    long long permille() const;
    std::string percent() const; // "58.9%", or "—" when undefined

    bool operator==(const Metric&) const = default;
};

struct MetricsReport {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long ambiguous = 0;
    Metric precision;
    Metric recall;
    Metric f1;

    bool operator==(const MetricsReport&) const = default;
};

// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 their harmonic mean.
// Zero denominators yield Undefined; f1 is Undefined when precision or
// recall is, or when both are zero.
MetricsReport compute_metrics(long long tp, long long fp, long long fn,
                              long long ambiguous = 0);

// Micro-aggregation: counts summed across cases, metrics computed once.
MetricsReport aggregate(const std::vector<MatchOutcome>& outcomes);

struct PerImageRow {
    std::string case_id;
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long ambiguous = 0;
    Metric recall;
    bool met_half = false; // recall defined and >= 0.5
};

std::vector<PerImageRow> per_image_summary(const std::vector<MatchOutcome>& outcomes);

enum class ReportFormat { TableText, DelimitedValues };

struct SystemReport {
    std::string system;
    MetricsReport metrics;
};

// Columns exactly: System, TP, FP, FN, Precision, Recall, F1-score.
// Percentages carry one decimal, half-even.
std::string emit_report(const std::vector<SystemReport>& systems, ReportFormat format);

struct ParsedReportRow {
    std::string system;
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    std::optional<long long> precision_permille;
    std::optional<long long> recall_permille;
    std::optional<long long> f1_permille;

    bool operator==(const ParsedReportRow&) const = default;
};

// Reads back a delimited-values report; emit/parse round-trips the numbers.
std::vector<ParsedReportRow> parse_delimited_report(const std::string& bytes);

std::string emit_per_image_csv(const std::string& system,
                               const std::vector<PerImageRow>& rows);

} // namespace stonediag
