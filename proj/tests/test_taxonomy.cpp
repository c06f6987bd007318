#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stonediag/errors.hpp"
#include "stonediag/taxonomy.hpp"

#include "test_support.hpp"

#include <sstream>

using namespace stonediag;

namespace {

PatternTaxonomy two_label_taxonomy() {
    return PatternTaxonomy::from_labels(
        "t1", {{"BLACK_CRUST", "Black crust", {"gypsum crust"}, {}},
               {"BIOCOLONIZATION", "Biological colonization", {"biocolonization"}, {}}});
}

} // namespace

TEST_CASE("document with two labels loads a taxonomy of size 2") {
    std::istringstream in(
        "{\"version\":\"t1\"}\n"
        "{\"id\":\"BLACK_CRUST\",\"display_name\":\"Black crust\",\"aliases\":[],"
        "\"partial_of\":[]}\n"
        "{\"id\":\"BIOCOLONIZATION\",\"display_name\":\"Biological colonization\","
        "\"aliases\":[],\"partial_of\":[]}\n");
    const PatternTaxonomy t = load_taxonomy(in, "<test>");
    CHECK(t.labels().size() == 2);
    CHECK(t.has_id("BLACK_CRUST"));
    CHECK(t.has_id("BIOCOLONIZATION"));
}

TEST_CASE("an alias under two labels is a duplicate-alias error naming both") {
    std::istringstream in(
        "{\"version\":\"t1\"}\n"
        "{\"id\":\"BLACK_CRUST\",\"display_name\":\"Black crust\",\"aliases\":[\"crust\"],"
        "\"partial_of\":[]}\n"
        "{\"id\":\"SALT_CRUST\",\"display_name\":\"Salt crust\",\"aliases\":[\"crust\"],"
        "\"partial_of\":[]}\n");
    try {
        load_taxonomy(in, "<test>");
        FAIL("expected DuplicateAliasError");
    } catch (const DuplicateAliasError& e) {
        const std::string what = e.what();
        CHECK(what.find("BLACK_CRUST") != std::string::npos);
        CHECK(what.find("SALT_CRUST") != std::string::npos);
        CHECK(what.find("crust") != std::string::npos);
    }
}

TEST_CASE("structural validation") {
    CHECK_THROWS_AS(PatternTaxonomy::from_labels(
                        "t", {{"bad_id", "Bad", {}, {}}}),
                    ConfigError);
    CHECK_THROWS_AS(PatternTaxonomy::from_labels(
                        "t", {{"A", "Alpha", {}, {}}, {"A", "Alpha again", {}, {}}}),
                    ConfigError);
    CHECK_THROWS_AS(PatternTaxonomy::from_labels("t", {{"A", "Alpha", {}, {"A"}}}),
                    ConfigError); // self-overlap
    CHECK_THROWS_AS(PatternTaxonomy::from_labels("t", {{"A", "Alpha", {}, {"MISSING"}}}),
                    ConfigError);
}

TEST_CASE("normalization folds case, whitespace and punctuation; unknown keeps raw text") {
    PatternTaxonomy t = two_label_taxonomy();
    CHECK(normalize_label("Black  crust.", t) == known_label("BLACK_CRUST"));
    CHECK(normalize_label("GYPSUM CRUST", t) == known_label("BLACK_CRUST"));
    CHECK(normalize_label("BLACK_CRUST", t) == known_label("BLACK_CRUST"));
    const LabelRef unknown = normalize_label("dark stain", t);
    CHECK_FALSE(unknown.known);
    CHECK(unknown.value == "dark stain");
    // Totality: arbitrary garbage never throws.
    CHECK_FALSE(normalize_label("", t).known);
    CHECK_FALSE(normalize_label("...", t).known);
}

TEST_CASE("partial overlap is symmetric and declared-only") {
    const PatternTaxonomy t = PatternTaxonomy::from_labels(
        "t", {{"BLACK_CRUST", "Black crust", {}, {}},
              {"SOILING", "Soiling", {}, {"BLACK_CRUST"}},
              {"CRACK", "Crack", {}, {}}});
    CHECK(t.partial_overlap("SOILING", "BLACK_CRUST"));
    CHECK(t.partial_overlap("BLACK_CRUST", "SOILING"));
    CHECK_FALSE(t.partial_overlap("SOILING", "CRACK"));
    CHECK_FALSE(t.partial_overlap("SOILING", "SOILING"));
}

TEST_CASE("idempotence property over fuzzed taxonomies") {
    test_support::WordGen gen(7);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<PatternLabel> labels;
        const int n = gen.next_int(1, 12);
        for (int i = 0; i < n; ++i) {
            PatternLabel label;
            label.id = "L" + std::to_string(iter) + "_" + std::to_string(i);
            label.display_name = gen.words(gen.next_int(1, 3)) + " " + std::to_string(i);
            const int aliases = gen.next_int(0, 2);
            for (int a = 0; a < aliases; ++a)
                label.aliases.push_back(gen.words(2) + " " + std::to_string(i) + "x" +
                                        std::to_string(a));
            labels.push_back(std::move(label));
        }
        const PatternTaxonomy t = PatternTaxonomy::from_labels("fuzz", labels);
        for (const PatternLabel& label : t.labels()) {
            // Normalizing a display name yields its own id, for all labels.
            const LabelRef ref = t.normalize(label.display_name);
            CHECK(ref == known_label(label.id));
            // Normalization is idempotent: normalizing the id again holds.
            CHECK(t.normalize(ref.value) == known_label(label.id));
        }
    }
}

TEST_CASE("save/load round-trips structurally and byte-identically") {
    const PatternTaxonomy t = PatternTaxonomy::from_labels(
        "rt", {{"ALPHA", "Alpha pattern", {"first"}, {}},
               {"BETA", "Beta pattern", {"second", "other beta"}, {"ALPHA"}}});
    const std::string bytes = save_taxonomy(t);
    std::istringstream in(bytes);
    const PatternTaxonomy reloaded = load_taxonomy(in, "<roundtrip>");
    CHECK(reloaded == t);
    CHECK(save_taxonomy(reloaded) == bytes);
}

TEST_CASE("bundled sample taxonomy round-trips byte-identically") {
    const auto path = test_support::source_dir() / "data" / "taxonomy.jsonl";
    const std::string original = test_support::slurp(path);
    const PatternTaxonomy t = load_taxonomy_file(path.string());
    CHECK(t.labels().size() >= 20);
    CHECK(save_taxonomy(t) == original);
}

TEST_CASE("parse errors carry origin and line context") {
    std::istringstream in("{\"version\":\"t\"}\nnot json\n");
    try {
        load_taxonomy(in, "sample.jsonl");
        FAIL("expected FileParseError");
    } catch (const FileParseError& e) {
        CHECK(std::string(e.what()).find("sample.jsonl:2") != std::string::npos);
    }
}

TEST_CASE("built-in lithology and exposure vocabularies normalize") {
    CHECK(normalize_lithology("Limestone") == known_label("LIMESTONE"));
    CHECK(normalize_lithology("granitic rock") == known_label("GRANITE"));
    CHECK_FALSE(normalize_lithology("kryptonite").known);
    CHECK(*lithology_family("LIMESTONE") == LithologyFamily::Carbonate);
    CHECK(*lithology_family("GRANITE") == LithologyFamily::Silicate);
    CHECK(normalize_exposure("rain") == known_label("RAIN"));
    CHECK(normalize_exposure("sea spray") == known_label("MARINE_AEROSOL"));
    CHECK_FALSE(normalize_exposure("moonlight").known);
}
