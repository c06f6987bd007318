#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace stonediag {

// A free-text term resolved against a controlled vocabulary. When `known`
// is true, `value` holds a canonical id; otherwise the raw text survives
// verbatim so a human can review it.
struct LabelRef {
    std::string value;
    bool known = false;

    bool operator==(const LabelRef&) const = default;
    bool operator<(const LabelRef& o) const {
        return std::tie(known, value) < std::tie(o.known, o.value);
    }
};

inline LabelRef known_label(std::string id) { return {std::move(id), true}; }
inline LabelRef unknown_label(std::string raw) { return {std::move(raw), false}; }

struct PatternLabel {
    std::string id; // [A-Z][A-Z0-9_]*
    std::string display_name;
    std::vector<std::string> aliases;
    std::vector<std::string> partial_of; // ids this label partially overlaps

    bool operator==(const PatternLabel&) const = default;
};

// Immutable deterioration-pattern vocabulary. Built once from a file, then
// shared read-only across concurrently running agents.
class PatternTaxonomy {
public:
    static PatternTaxonomy from_labels(std::string version, std::vector<PatternLabel> labels);

    const std::string& version() const { return version_; }
    const std::vector<PatternLabel>& labels() const { return labels_; }
    bool has_id(const std::string& id) const;
    const PatternLabel* find(const std::string& id) const;

    // Exact match after key folding against ids, display names and aliases.
    // Never fails: unmatched text comes back as an unknown LabelRef.
    LabelRef normalize(std::string_view raw) const;

    // True when the two ids are declared partially overlapping, in either
    // direction. Drives the "ambiguous" outcome in scoring.
    bool partial_overlap(const std::string& a, const std::string& b) const;

    bool operator==(const PatternTaxonomy& o) const {
        return version_ == o.version_ && labels_ == o.labels_;
    }

private:
    std::string version_;
    std::vector<PatternLabel> labels_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, std::string> key_to_id_;
    std::set<std::pair<std::string, std::string>> partial_pairs_; // stored both ways
};

// ---------------------------------------------------------------------------
// Taxonomy file: UTF-8, one JSON object per line. First line
// {"version": ...}, then one {"id", "display_name", "aliases", "partial_of"}
// record per label. save/load round-trips byte-identically.

PatternTaxonomy load_taxonomy(std::istream& in, const std::string& origin);
PatternTaxonomy load_taxonomy_file(const std::string& path);
std::string save_taxonomy(const PatternTaxonomy& taxonomy);
void save_taxonomy_file(const PatternTaxonomy& taxonomy, const std::string& path);

LabelRef normalize_label(std::string_view raw, const PatternTaxonomy& taxonomy);

// ---------------------------------------------------------------------------
// Built-in substrate and exposure vocabularies. Unlike pattern labels these
// are fixed background knowledge (rock families do not vary by project), so
// they ship as tables rather than files.

enum class LithologyFamily { Carbonate, Silicate, Other };

struct LithologyClass {
    std::string id;
    LithologyFamily family;
    std::vector<std::string> aliases;
};

struct ExposureFactor {
    std::string id;
    std::string description;
    std::vector<std::string> aliases;
};

const std::vector<LithologyClass>& lithology_classes();
const std::vector<ExposureFactor>& exposure_factors();

LabelRef normalize_lithology(std::string_view raw);
LabelRef normalize_exposure(std::string_view raw);
std::optional<LithologyFamily> lithology_family(const std::string& id);

} // namespace stonediag
