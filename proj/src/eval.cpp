#include "stonediag/eval.hpp"

#include "stonediag/errors.hpp"
#include "stonediag/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Ground truth

std::vector<GroundTruthCase> load_ground_truth(std::istream& in, const std::string& origin,
                                               const PatternTaxonomy& taxonomy) {
    std::vector<GroundTruthCase> cases;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        GroundTruthCase c;
        try {
            const ordered_json j = ordered_json::parse(line);
            c.case_id = j.at("case_id").get<std::string>();
            c.image = j.at("image").get<std::string>();
            c.expected = j.at("expected").get<std::vector<std::string>>();
            c.notes = j.value("notes", std::string());
        } catch (const std::exception& e) {
            throw FileParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(c.case_id).second)
            throw ConfigError(origin + ": duplicate case_id " + c.case_id);
        std::set<std::string> dedup;
        for (const std::string& id : c.expected) {
            if (!taxonomy.has_id(id))
                throw ConfigError(origin + ": case " + c.case_id + " expects unknown pattern '" +
                                  id + "'");
            if (!dedup.insert(id).second)
                throw ConfigError(origin + ": case " + c.case_id + " lists " + id + " twice");
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

std::vector<GroundTruthCase> load_ground_truth_file(const std::string& path,
                                                    const PatternTaxonomy& taxonomy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("ground truth: cannot open " + path);
    return load_ground_truth(in, path, taxonomy);
}

std::string save_ground_truth(const std::vector<GroundTruthCase>& cases) {
    std::string out;
    for (const GroundTruthCase& c : cases) {
        ordered_json j;
        j["case_id"] = c.case_id;
        j["image"] = c.image;
        j["expected"] = c.expected;
        j["notes"] = c.notes;
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matching

MatchOutcome match_findings(const std::vector<Finding>& predictions,
                            const GroundTruthCase& truth, const PatternTaxonomy& taxonomy) {
    for (const std::string& id : truth.expected)
        if (!taxonomy.has_id(id))
            throw ConfigError("ground truth for " + truth.case_id + " names unknown pattern '" +
                              id + "'");

    MatchOutcome outcome;
    outcome.case_id = truth.case_id;

    std::vector<std::string> remaining = truth.expected; // unconsumed truths
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const Finding& p = predictions[i];
        if (p.pattern.known) {
            auto exact = std::find(remaining.begin(), remaining.end(), p.pattern.value);
            if (exact != remaining.end()) {
                outcome.pairs.push_back({i, *exact});
                remaining.erase(exact);
                continue;
            }
            const bool overlaps = std::any_of(
                remaining.begin(), remaining.end(), [&](const std::string& t) {
                    return taxonomy.partial_overlap(p.pattern.value, t);
                });
            if (overlaps) {
                outcome.ambiguous_predictions.push_back(i);
                continue; // counted but consumes nothing
            }
        }
        outcome.unmatched_predictions.push_back(i);
    }
    outcome.unmatched_truths = std::move(remaining);

    outcome.tp = static_cast<long long>(outcome.pairs.size());
    outcome.fp = static_cast<long long>(outcome.unmatched_predictions.size());
    outcome.fn = static_cast<long long>(outcome.unmatched_truths.size());
    outcome.ambiguous = static_cast<long long>(outcome.ambiguous_predictions.size());
    return outcome;
}

// ---------------------------------------------------------------------------
// Metrics

long long Metric::permille() const {
    if (!defined) throw MisuseError("permille() on an undefined metric");
    const long long n = num * 1000;
    long long q = n / den;
    const long long r = n % den;
    if (2 * r > den || (2 * r == den && (q % 2) != 0)) ++q;
    return q;
}

std::string Metric::percent() const {
    if (!defined) return "—"; // em dash, the undefined marker
    const long long pm = permille();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%lld%%", pm / 10, pm % 10);
    return buf;
}

namespace {

long long gcd_ll(long long a, long long b) {
    while (b != 0) {
        const long long t = a % b;
        a = b;
        b = t;
    }
    return a < 0 ? -a : a;
}

Metric make_metric(long long num, long long den) {
    if (den == 0) return {};
    if (num == 0) return {true, 0, 1};
    const long long g = gcd_ll(num, den);
    return {true, num / g, den / g};
}

} // namespace

MetricsReport compute_metrics(long long tp, long long fp, long long fn, long long ambiguous) {
    if (tp < 0 || fp < 0 || fn < 0 || ambiguous < 0)
        throw MisuseError("metrics: counts must be >= 0");
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.ambiguous = ambiguous;
    if (tp + fp > 0) r.precision = make_metric(tp, tp + fp);
    if (tp + fn > 0) r.recall = make_metric(tp, tp + fn);
    // Harmonic mean 2PR/(P+R); undefined when either factor is, or when
    // both are zero. Equals 2tp/(2tp+fp+fn) whenever defined.
    if (r.precision.defined && r.recall.defined && tp > 0)
        r.f1 = make_metric(2 * tp, 2 * tp + fp + fn);
    return r;
}

MetricsReport aggregate(const std::vector<MatchOutcome>& outcomes) {
    std::set<std::string> seen;
    long long tp = 0, fp = 0, fn = 0, ambiguous = 0;
    for (const MatchOutcome& o : outcomes) {
        if (!seen.insert(o.case_id).second)
            throw ConfigError("aggregate: duplicate case_id " + o.case_id);
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        ambiguous += o.ambiguous;
    }
    return compute_metrics(tp, fp, fn, ambiguous);
}

std::vector<PerImageRow> per_image_summary(const std::vector<MatchOutcome>& outcomes) {
    std::vector<PerImageRow> rows;
    for (const MatchOutcome& o : outcomes) {
        PerImageRow row;
        row.case_id = o.case_id;
        row.tp = o.tp;
        row.fp = o.fp;
        row.fn = o.fn;
        row.ambiguous = o.ambiguous;
        if (o.tp + o.fn > 0) row.recall = make_metric(o.tp, o.tp + o.fn);
        row.met_half = row.recall.defined && 2 * o.tp >= o.tp + o.fn;
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(),
              [](const PerImageRow& a, const PerImageRow& b) { return a.case_id < b.case_id; });
    return rows;
}

// ---------------------------------------------------------------------------
// Reports

namespace {
const char* const kHeaderCells[] = {"System", "TP",        "FP",    "FN",
                                    "Precision", "Recall", "F1-score"};
}

std::string emit_report(const std::vector<SystemReport>& systems, ReportFormat format) {
    std::vector<std::vector<std::string>> rows;
    rows.emplace_back(std::begin(kHeaderCells), std::end(kHeaderCells));
    for (const SystemReport& s : systems) {
        rows.push_back({s.system, std::to_string(s.metrics.tp), std::to_string(s.metrics.fp),
                        std::to_string(s.metrics.fn), s.metrics.precision.percent(),
                        s.metrics.recall.percent(), s.metrics.f1.percent()});
    }

    std::string out;
    if (format == ReportFormat::DelimitedValues) {
        for (const auto& row : rows) {
            out += join(row, ",");
            out += '\n';
        }
        return out;
    }

    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += "  ";
            std::string cell = row[c];
            // First column left-aligned, numbers right-aligned.
            if (c == 0) cell.append(widths[c] - cell.size(), ' ');
            else cell.insert(0, widths[c] - cell.size(), ' ');
            out += cell;
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    return out;
}

namespace {

std::optional<long long> parse_percent_cell(const std::string& cell, const std::string& origin) {
    if (cell == "—") return std::nullopt;
    if (cell.size() < 2 || cell.back() != '%')
        throw FileParseError(origin + ": bad percent cell '" + cell + "'");
    const std::string body = cell.substr(0, cell.size() - 1);
    const std::size_t dot = body.find('.');
    if (dot == std::string::npos || dot + 2 != body.size())
        throw FileParseError(origin + ": percent cell needs one decimal: '" + cell + "'");
    try {
        const long long whole = std::stoll(body.substr(0, dot));
        const long long tenth = std::stoll(body.substr(dot + 1));
        return whole * 10 + tenth;
    } catch (const std::exception&) {
        throw FileParseError(origin + ": bad percent cell '" + cell + "'");
    }
}

} // namespace

std::vector<ParsedReportRow> parse_delimited_report(const std::string& bytes) {
    const std::string origin = "report";
    std::istringstream in(bytes);
    std::string line;
    std::vector<ParsedReportRow> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (cells.size() != 7)
            throw FileParseError(origin + ": expected 7 columns, got " +
                                 std::to_string(cells.size()));
        if (!header_seen) {
            for (std::size_t c = 0; c < 7; ++c)
                if (cells[c] != kHeaderCells[c])
                    throw FileParseError(origin + ": unexpected header cell '" + cells[c] + "'");
            header_seen = true;
            continue;
        }
        ParsedReportRow row;
        row.system = cells[0];
        try {
            row.tp = std::stoll(cells[1]);
            row.fp = std::stoll(cells[2]);
            row.fn = std::stoll(cells[3]);
        } catch (const std::exception&) {
            throw FileParseError(origin + ": bad count in row for " + row.system);
        }
        row.precision_permille = parse_percent_cell(cells[4], origin);
        row.recall_permille = parse_percent_cell(cells[5], origin);
        row.f1_permille = parse_percent_cell(cells[6], origin);
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw FileParseError(origin + ": missing header row");
    return rows;
}

std::string emit_per_image_csv(const std::string& system, const std::vector<PerImageRow>& rows) {
    std::string out = "system,case_id,tp,fp,fn,ambiguous,recall,met_half\n";
    for (const PerImageRow& r : rows) {
        out += system + "," + r.case_id + "," + std::to_string(r.tp) + "," +
               std::to_string(r.fp) + "," + std::to_string(r.fn) + "," +
               std::to_string(r.ambiguous) + "," + r.recall.percent() + "," +
               (r.met_half ? "true" : "false") + "\n";
    }
    return out;
}

} // namespace stonediag
