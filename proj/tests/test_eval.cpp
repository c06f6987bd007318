#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stonediag/errors.hpp"
#include "stonediag/eval.hpp"
#include "stonediag/text.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

using namespace stonediag;

namespace {

// Taxonomy with a few declared partial overlaps, mirroring the bundled one.
PatternTaxonomy overlap_taxonomy() {
    return PatternTaxonomy::from_labels(
        "t", {{"BLACK_CRUST", "Black crust", {}, {}},
              {"SOILING", "Soiling", {}, {"BLACK_CRUST", "DEPOSIT"}},
              {"DEPOSIT", "Deposit", {}, {}},
              {"BIO", "Biological colonization", {}, {}},
              {"PLANT", "Plant growth", {}, {"BIO"}},
              {"CRACK", "Crack", {}, {}},
              {"EFF", "Efflorescence", {}, {}}});
}

Finding pred(const PatternTaxonomy& tax, const std::string& term) {
    return {tax.normalize(term), "somewhere", "because"};
}

GroundTruthCase truth_case(std::vector<std::string> expected,
                           const std::string& case_id = "case") {
    return {case_id, "img.png", std::move(expected), ""};
}

// Closed-form oracle, derived without mutable consumption state:
//   TP(i)  <=> label(i) in truth and no earlier prediction shares the label.
//   AMB(i) <=> not TP(i) and some truth with a partial overlap to label(i)
//              is not claimed by any earlier prediction's label.
MatchOutcome closed_form_oracle(const std::vector<Finding>& predictions,
                                const GroundTruthCase& truth, const PatternTaxonomy& tax) {
    MatchOutcome o;
    o.case_id = truth.case_id;
    std::set<std::string> truth_set(truth.expected.begin(), truth.expected.end());
    std::set<std::string> consumed; // truth ids claimed by any TP so far
    std::set<std::string> earlier_labels;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const Finding& p = predictions[i];
        const bool tp = p.pattern.known && truth_set.count(p.pattern.value) &&
                        !earlier_labels.count(p.pattern.value);
        if (tp) {
            o.pairs.push_back({i, p.pattern.value});
            consumed.insert(p.pattern.value);
        } else if (p.pattern.known) {
            bool amb = false;
            for (const std::string& t : truth.expected) {
                const bool t_consumed_before = earlier_labels.count(t) > 0;
                if (!t_consumed_before && tax.partial_overlap(p.pattern.value, t)) amb = true;
            }
            if (amb) o.ambiguous_predictions.push_back(i);
            else o.unmatched_predictions.push_back(i);
        } else {
            o.unmatched_predictions.push_back(i);
        }
        if (p.pattern.known) earlier_labels.insert(p.pattern.value);
    }
    for (const std::string& t : truth.expected)
        if (!consumed.count(t)) o.unmatched_truths.push_back(t);
    o.tp = static_cast<long long>(o.pairs.size());
    o.fp = static_cast<long long>(o.unmatched_predictions.size());
    o.fn = static_cast<long long>(o.unmatched_truths.size());
    o.ambiguous = static_cast<long long>(o.ambiguous_predictions.size());
    return o;
}

// Exhaustive assignment oracle: maximum number of prediction->truth pairs
// under exact label equality, by brute-force recursion.
long long max_tp_exhaustive(const std::vector<Finding>& predictions,
                            const std::vector<std::string>& truths, std::size_t pi,
                            std::vector<bool>& used) {
    if (pi == predictions.size()) return 0;
    long long best = max_tp_exhaustive(predictions, truths, pi + 1, used); // skip pi
    if (predictions[pi].pattern.known) {
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (!used[t] && truths[t] == predictions[pi].pattern.value) {
                used[t] = true;
                best = std::max(best,
                                1 + max_tp_exhaustive(predictions, truths, pi + 1, used));
                used[t] = false;
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("exact match produces a TP and consumes the truth") {
    const PatternTaxonomy tax = overlap_taxonomy();
    const auto o = match_findings({pred(tax, "BLACK_CRUST")}, truth_case({"BLACK_CRUST"}), tax);
    CHECK(o.tp == 1);
    CHECK(o.fp == 0);
    CHECK(o.fn == 0);
    CHECK(o.ambiguous == 0);
    REQUIRE(o.pairs.size() == 1);
    CHECK(o.pairs[0].truth_id == "BLACK_CRUST");
}

TEST_CASE("no predictions: every truth is a FN") {
    const PatternTaxonomy tax = overlap_taxonomy();
    const auto o = match_findings({}, truth_case({"BLACK_CRUST", "BIO", "CRACK"}), tax);
    CHECK(o.tp == 0);
    CHECK(o.fn == 3);
    CHECK(o.unmatched_truths == std::vector<std::string>{"BLACK_CRUST", "BIO", "CRACK"});
}

TEST_CASE("partial overlap marks the prediction ambiguous without consuming the truth") {
    const PatternTaxonomy tax = overlap_taxonomy();
    // SOILING overlaps BLACK_CRUST: ambiguous, and a later exact BLACK_CRUST
    // can still claim the truth.
    const auto o = match_findings({pred(tax, "SOILING"), pred(tax, "BLACK_CRUST")},
                                  truth_case({"BLACK_CRUST"}), tax);
    CHECK(o.tp == 1);
    CHECK(o.fp == 0);
    CHECK(o.fn == 0);
    CHECK(o.ambiguous == 1);
}

TEST_CASE("unknown predictions are always FPs") {
    const PatternTaxonomy tax = overlap_taxonomy();
    const auto o = match_findings({pred(tax, "mystery haze")}, truth_case({"CRACK"}), tax);
    CHECK(o.fp == 1);
    CHECK(o.fn == 1);
}

TEST_CASE("truth ids missing from the taxonomy are a configuration error") {
    const PatternTaxonomy tax = overlap_taxonomy();
    CHECK_THROWS_AS(match_findings({}, truth_case({"NOT_A_LABEL"}), tax), ConfigError);
}

TEST_CASE("ambiguous consumes nothing: tp + fn always equals the truth size") {
    const PatternTaxonomy tax = overlap_taxonomy();
    const auto o = match_findings(
        {pred(tax, "SOILING"), pred(tax, "PLANT"), pred(tax, "EFF")},
        truth_case({"BLACK_CRUST", "BIO", "EFF"}), tax);
    CHECK(o.tp + o.fn == 3);
    CHECK(o.ambiguous == 2);
    CHECK(o.tp == 1); // EFF
}

TEST_CASE("fuzzed matcher equals both oracles on <=5x5 instances") {
    const PatternTaxonomy tax = overlap_taxonomy();
    const std::vector<std::string> labels = {"BLACK_CRUST", "SOILING", "DEPOSIT", "BIO",
                                             "PLANT",       "CRACK",   "EFF"};
    test_support::WordGen gen(61);
    int checked = 0;
    for (int iter = 0; iter < 3000; ++iter) {
        std::vector<Finding> predictions;
        const int n_pred = gen.next_int(0, 5);
        for (int i = 0; i < n_pred; ++i) {
            if (gen.next_int(0, 9) == 0) {
                predictions.push_back(pred(tax, "unknown " + gen.word()));
            } else {
                predictions.push_back(
                    pred(tax, labels[static_cast<std::size_t>(gen.next_int(0, 6))]));
            }
        }
        std::vector<std::string> pool = labels;
        std::vector<std::string> expected;
        const int n_truth = gen.next_int(0, 5);
        for (int i = 0; i < n_truth && !pool.empty(); ++i) {
            const auto pick = static_cast<std::size_t>(
                gen.next_int(0, static_cast<int>(pool.size()) - 1));
            expected.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        const GroundTruthCase truth = truth_case(expected);

        const MatchOutcome greedy = match_findings(predictions, truth, tax);
        const MatchOutcome oracle = closed_form_oracle(predictions, truth, tax);
        CHECK(greedy.tp == oracle.tp);
        CHECK(greedy.fp == oracle.fp);
        CHECK(greedy.fn == oracle.fn);
        CHECK(greedy.ambiguous == oracle.ambiguous);
        CHECK(greedy.pairs == oracle.pairs);
        CHECK(greedy.unmatched_predictions == oracle.unmatched_predictions);
        CHECK(greedy.unmatched_truths == oracle.unmatched_truths);

        std::vector<bool> used(truth.expected.size(), false);
        CHECK(greedy.tp == max_tp_exhaustive(predictions, truth.expected, 0, used));

        // Permuting the truth list never changes the counts.
        GroundTruthCase shuffled = truth;
        std::reverse(shuffled.expected.begin(), shuffled.expected.end());
        const MatchOutcome reordered = match_findings(predictions, shuffled, tax);
        CHECK(reordered.tp == greedy.tp);
        CHECK(reordered.fp == greedy.fp);
        CHECK(reordered.fn == greedy.fn);
        CHECK(reordered.ambiguous == greedy.ambiguous);
        ++checked;
    }
    CHECK(checked == 3000);
}

TEST_CASE("metrics land on the reference comparison rows") {
    const MetricsReport single_shot = compute_metrics(73, 51, 126);
    CHECK(single_shot.precision.percent() == "58.9%");
    CHECK(single_shot.recall.percent() == "36.7%");
    CHECK(single_shot.f1.percent() == "45.2%");
    CHECK(single_shot.precision.value() == doctest::Approx(0.589).epsilon(0.0005));

    const MetricsReport agentic = compute_metrics(149, 51, 65);
    CHECK(agentic.precision.percent() == "74.5%");
    CHECK(agentic.recall.percent() == "69.6%");
    CHECK(agentic.f1.percent() == "72.0%");
}

TEST_CASE("degenerate and perfect counts") {
    const MetricsReport zeros = compute_metrics(0, 0, 0);
    CHECK_FALSE(zeros.precision.defined);
    CHECK_FALSE(zeros.recall.defined);
    CHECK_FALSE(zeros.f1.defined);
    CHECK(zeros.precision.percent() == "—");

    const MetricsReport perfect = compute_metrics(10, 0, 0);
    CHECK(perfect.precision == Metric{true, 1, 1});
    CHECK(perfect.recall == Metric{true, 1, 1});
    CHECK(perfect.f1 == Metric{true, 1, 1});
}

TEST_CASE("f1 undefined exactly when precision or recall undefined or both zero") {
    CHECK_FALSE(compute_metrics(0, 1, 1).f1.defined); // both zero
    CHECK_FALSE(compute_metrics(0, 0, 5).f1.defined); // precision undefined
    CHECK_FALSE(compute_metrics(0, 5, 0).f1.defined); // recall undefined
    CHECK(compute_metrics(1, 5, 9).f1.defined);
}

TEST_CASE("metric identity: harmonic mean equals 2tp/(2tp+fp+fn) as exact rationals") {
    test_support::WordGen gen(67);
    for (int iter = 0; iter < 10000; ++iter) {
        const long long tp = gen.next_int(0, 500);
        const long long fp = gen.next_int(0, 500);
        const long long fn = gen.next_int(0, 500);
        const MetricsReport r = compute_metrics(tp, fp, fn);
        if (r.precision.defined) CHECK(r.precision.num * (tp + fp) == tp * r.precision.den);
        if (r.recall.defined) CHECK(r.recall.num * (tp + fn) == tp * r.recall.den);
        if (r.f1.defined) {
            // Cross-multiplied harmonic-mean form: f1 * (P+R) == 2 P R.
            // P = tp/(tp+fp), R = tp/(tp+fn); scale by (tp+fp)(tp+fn).
            const long long lhs =
                r.f1.num * (tp * (tp + fn) + tp * (tp + fp)); // f1.den implicit below
            const long long rhs = r.f1.den * 2 * tp * tp;
            CHECK(lhs == rhs);
            CHECK(r.f1.num * (2 * tp + fp + fn) == 2 * tp * r.f1.den);
            CHECK(r.precision.defined);
            CHECK(r.recall.defined);
        } else {
            CHECK((!r.precision.defined || !r.recall.defined || tp == 0));
        }
    }
}

TEST_CASE("monotonicity: one more TP never lowers any metric") {
    test_support::WordGen gen(71);
    for (int iter = 0; iter < 2000; ++iter) {
        const long long tp = gen.next_int(0, 80);
        const long long fp = gen.next_int(0, 80);
        const long long fn = gen.next_int(0, 80);
        const MetricsReport before = compute_metrics(tp, fp, fn);
        const MetricsReport after = compute_metrics(tp + 1, fp, fn);
        if (before.precision.defined)
            CHECK(after.precision.value() >= before.precision.value() - 1e-12);
        if (before.recall.defined) CHECK(after.recall.value() >= before.recall.value() - 1e-12);
        if (before.f1.defined) CHECK(after.f1.value() >= before.f1.value() - 1e-12);
    }
}

TEST_CASE("aggregate sums counts then computes once") {
    const PatternTaxonomy tax = overlap_taxonomy();
    MatchOutcome a;
    a.case_id = "c1";
    a.tp = 1;
    a.fn = 1;
    MatchOutcome b;
    b.case_id = "c2";
    b.tp = 3;
    b.fp = 1;
    const MetricsReport r = aggregate({a, b});
    CHECK(r.tp == 4);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.precision == Metric{true, 4, 5});
    CHECK(r.recall == Metric{true, 4, 5});
    CHECK(r.f1 == Metric{true, 4, 5});

    MatchOutcome dup = b;
    CHECK_THROWS_AS(aggregate({b, dup}), ConfigError);

    // Single case aggregates to its own metrics.
    const MetricsReport single = aggregate({a});
    const MetricsReport direct = compute_metrics(a.tp, a.fp, a.fn, a.ambiguous);
    CHECK(single == direct);
}

TEST_CASE("per-image recall and the 50% threshold") {
    MatchOutcome low;
    low.case_id = "img1";
    low.tp = 4;
    low.fn = 6;
    MatchOutcome high;
    high.case_id = "img2";
    high.tp = 8;
    high.fn = 2;
    MatchOutcome undef;
    undef.case_id = "img3";

    const auto rows = per_image_summary({high, low, undef}); // sorted by case_id
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].case_id == "img1");
    CHECK(rows[0].recall.percent() == "40.0%");
    CHECK_FALSE(rows[0].met_half);
    CHECK(rows[1].recall.percent() == "80.0%");
    CHECK(rows[1].met_half);
    CHECK_FALSE(rows[2].recall.defined);
    CHECK_FALSE(rows[2].met_half);
}

TEST_CASE("exactly-half recall counts as met_half") {
    MatchOutcome half;
    half.case_id = "img";
    half.tp = 5;
    half.fn = 5;
    const auto rows = per_image_summary({half});
    CHECK(rows[0].met_half);
}

TEST_CASE("report rows render the reference count rows verbatim") {
    std::vector<SystemReport> systems = {{"single-shot", compute_metrics(73, 51, 126)},
                                         {"multi-agent", compute_metrics(149, 51, 65)}};
    const std::string table = emit_report(systems, ReportFormat::TableText);
    std::istringstream lines(table);
    std::string header, row1, row2;
    std::getline(lines, header);
    std::getline(lines, row1);
    std::getline(lines, row2);
    CHECK(split_words(header) ==
          std::vector<std::string>{"System", "TP", "FP", "FN", "Precision", "Recall",
                                   "F1-score"});
    CHECK(split_words(row1) == std::vector<std::string>{"single-shot", "73", "51", "126",
                                                        "58.9%", "36.7%", "45.2%"});
    CHECK(split_words(row2) == std::vector<std::string>{"multi-agent", "149", "51", "65",
                                                        "74.5%", "69.6%", "72.0%"});
}

TEST_CASE("empty report is header-only in both formats") {
    const std::string csv = emit_report({}, ReportFormat::DelimitedValues);
    CHECK(csv == "System,TP,FP,FN,Precision,Recall,F1-score\n");
    const std::string table = emit_report({}, ReportFormat::TableText);
    CHECK(split_words(table) == std::vector<std::string>{"System", "TP", "FP", "FN",
                                                         "Precision", "Recall", "F1-score"});
}

TEST_CASE("delimited report re-parses to the same numbers, including undefined cells") {
    std::vector<SystemReport> systems = {{"arm-a", compute_metrics(9, 1, 3, 1)},
                                         {"arm-b", compute_metrics(0, 0, 0)}};
    const std::string csv = emit_report(systems, ReportFormat::DelimitedValues);
    const auto rows = parse_delimited_report(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].system == "arm-a");
    CHECK(rows[0].tp == 9);
    CHECK(rows[0].fp == 1);
    CHECK(rows[0].fn == 3);
    CHECK(*rows[0].precision_permille == 900);
    CHECK(*rows[0].recall_permille == 750);
    CHECK(*rows[0].f1_permille == 818);
    CHECK(rows[1].system == "arm-b");
    CHECK_FALSE(rows[1].precision_permille.has_value());
    CHECK_FALSE(rows[1].recall_permille.has_value());
    CHECK_FALSE(rows[1].f1_permille.has_value());

    // Fuzzed emit/parse round trip on the rendered numbers.
    test_support::WordGen gen(73);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<SystemReport> rnd = {
            {"sys" + std::to_string(iter),
             compute_metrics(gen.next_int(0, 300), gen.next_int(0, 300), gen.next_int(0, 300))}};
        const std::string bytes = emit_report(rnd, ReportFormat::DelimitedValues);
        const auto parsed = parse_delimited_report(bytes);
        REQUIRE(parsed.size() == 1);
        CHECK(parsed[0].tp == rnd[0].metrics.tp);
        CHECK(parsed[0].fp == rnd[0].metrics.fp);
        CHECK(parsed[0].fn == rnd[0].metrics.fn);
        if (rnd[0].metrics.precision.defined)
            CHECK(*parsed[0].precision_permille == rnd[0].metrics.precision.permille());
        else
            CHECK_FALSE(parsed[0].precision_permille.has_value());
    }
}

TEST_CASE("ground-truth corpus validation") {
    const PatternTaxonomy tax = overlap_taxonomy();
    std::istringstream good(
        "{\"case_id\":\"c1\",\"image\":\"a.png\",\"expected\":[\"CRACK\"],\"notes\":\"\"}\n"
        "{\"case_id\":\"c2\",\"image\":\"b.png\",\"expected\":[\"BIO\",\"EFF\"],"
        "\"notes\":\"x\"}\n");
    const auto corpus = load_ground_truth(good, "<t>", tax);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[1].expected == std::vector<std::string>{"BIO", "EFF"});

    std::istringstream unknown_id(
        "{\"case_id\":\"c1\",\"image\":\"a.png\",\"expected\":[\"NOPE\"],\"notes\":\"\"}\n");
    CHECK_THROWS_AS(load_ground_truth(unknown_id, "<t>", tax), ConfigError);

    std::istringstream dup_expected(
        "{\"case_id\":\"c1\",\"image\":\"a.png\",\"expected\":[\"CRACK\",\"CRACK\"],"
        "\"notes\":\"\"}\n");
    CHECK_THROWS_AS(load_ground_truth(dup_expected, "<t>", tax), ConfigError);

    std::istringstream dup_case(
        "{\"case_id\":\"c1\",\"image\":\"a.png\",\"expected\":[],\"notes\":\"\"}\n"
        "{\"case_id\":\"c1\",\"image\":\"b.png\",\"expected\":[],\"notes\":\"\"}\n");
    CHECK_THROWS_AS(load_ground_truth(dup_case, "<t>", tax), ConfigError);
}
