#include "stonediag/taxonomy.hpp"

#include "stonediag/errors.hpp"
#include "stonediag/text.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

namespace {

bool valid_id(std::string_view id) {
    if (id.empty() || id[0] < 'A' || id[0] > 'Z') return false;
    for (char c : id) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

} // namespace

PatternTaxonomy PatternTaxonomy::from_labels(std::string version,
                                             std::vector<PatternLabel> labels) {
    PatternTaxonomy t;
    t.version_ = std::move(version);
    t.labels_ = std::move(labels);

    for (std::size_t i = 0; i < t.labels_.size(); ++i) {
        const PatternLabel& label = t.labels_[i];
        if (!valid_id(label.id))
            throw ConfigError("taxonomy: invalid id '" + label.id + "'");
        if (!t.by_id_.emplace(label.id, i).second)
            throw ConfigError("taxonomy: duplicate id '" + label.id + "'");
    }

    auto claim_key = [&](const std::string& text, const PatternLabel& label) {
        const std::string key = fold_key(text);
        if (key.empty())
            throw ConfigError("taxonomy: name '" + text + "' of " + label.id +
                              " folds to nothing");
        auto [it, inserted] = t.key_to_id_.emplace(key, label.id);
        if (!inserted && it->second != label.id)
            throw DuplicateAliasError("taxonomy: alias '" + text + "' maps to both " +
                                      it->second + " and " + label.id);
    };

    for (const PatternLabel& label : t.labels_) {
        claim_key(label.id, label);
        claim_key(label.display_name, label);
        for (const std::string& alias : label.aliases) claim_key(alias, label);
    }

    for (const PatternLabel& label : t.labels_) {
        for (const std::string& other : label.partial_of) {
            if (other == label.id)
                throw ConfigError("taxonomy: " + label.id + " lists itself in partial_of");
            if (!t.by_id_.count(other))
                throw ConfigError("taxonomy: " + label.id + " overlaps unknown id '" +
                                  other + "'");
            t.partial_pairs_.emplace(label.id, other);
            t.partial_pairs_.emplace(other, label.id);
        }
    }
    return t;
}

bool PatternTaxonomy::has_id(const std::string& id) const { return by_id_.count(id) > 0; }

const PatternLabel* PatternTaxonomy::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &labels_[it->second];
}

LabelRef PatternTaxonomy::normalize(std::string_view raw) const {
    auto it = key_to_id_.find(fold_key(raw));
    if (it == key_to_id_.end()) return unknown_label(std::string(raw));
    return known_label(it->second);
}

bool PatternTaxonomy::partial_overlap(const std::string& a, const std::string& b) const {
    return partial_pairs_.count({a, b}) > 0;
}

LabelRef normalize_label(std::string_view raw, const PatternTaxonomy& taxonomy) {
    return taxonomy.normalize(raw);
}

// ---------------------------------------------------------------------------
// File format

PatternTaxonomy load_taxonomy(std::istream& in, const std::string& origin) {
    std::string line;
    int line_no = 0;
    std::string version;
    std::vector<PatternLabel> labels;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw FileParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!have_header) {
                if (!j.contains("version"))
                    throw std::runtime_error("first record must carry \"version\"");
                version = j.at("version").get<std::string>();
                have_header = true;
                continue;
            }
            PatternLabel label;
            label.id = j.at("id").get<std::string>();
            label.display_name = j.at("display_name").get<std::string>();
            label.aliases = j.at("aliases").get<std::vector<std::string>>();
            label.partial_of = j.at("partial_of").get<std::vector<std::string>>();
            labels.push_back(std::move(label));
        } catch (const InputError&) {
            throw;
        } catch (const std::exception& e) {
            throw FileParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw FileParseError(origin + ": missing version header");
    return PatternTaxonomy::from_labels(std::move(version), std::move(labels));
}

PatternTaxonomy load_taxonomy_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("taxonomy: cannot open " + path);
    return load_taxonomy(in, path);
}

std::string save_taxonomy(const PatternTaxonomy& taxonomy) {
    std::string out;
    ordered_json header;
    header["version"] = taxonomy.version();
    out += header.dump();
    out += '\n';
    for (const PatternLabel& label : taxonomy.labels()) {
        ordered_json j;
        j["id"] = label.id;
        j["display_name"] = label.display_name;
        j["aliases"] = label.aliases;
        j["partial_of"] = label.partial_of;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_taxonomy_file(const PatternTaxonomy& taxonomy, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("taxonomy: cannot write " + path);
    out << save_taxonomy(taxonomy);
}

// ---------------------------------------------------------------------------
// Built-in vocabularies

const std::vector<LithologyClass>& lithology_classes() {
    static const std::vector<LithologyClass> table = {
        {"LIMESTONE", LithologyFamily::Carbonate, {"calcareous stone"}},
        {"MARBLE", LithologyFamily::Carbonate, {}},
        {"TRAVERTINE", LithologyFamily::Carbonate, {}},
        {"DOLOSTONE", LithologyFamily::Carbonate, {"dolomite"}},
        {"GRANITE", LithologyFamily::Silicate, {"granitic rock"}},
        {"SANDSTONE", LithologyFamily::Silicate, {}},
        {"BASALT", LithologyFamily::Silicate, {"volcanic basalt"}},
        {"VOLCANIC_TUFF", LithologyFamily::Silicate, {"tuff"}},
        {"SLATE", LithologyFamily::Silicate, {}},
        {"OTHER_STONE", LithologyFamily::Other, {"unidentified stone"}},
    };
    return table;
}

const std::vector<ExposureFactor>& exposure_factors() {
    static const std::vector<ExposureFactor> table = {
        {"RAIN", "direct rainfall or runoff wetting", {"rainfall", "runoff"}},
        {"WIND", "wind action and wind-driven particles", {"wind exposure"}},
        {"POLLUTION", "urban or industrial airborne pollution", {"air pollution", "traffic pollution"}},
        {"MARINE_AEROSOL", "salt spray from a marine environment", {"sea spray", "salt spray"}},
        {"RISING_DAMP", "moisture rising from the ground", {"capillary rise", "ground moisture"}},
        {"CONDENSATION", "condensed moisture on sheltered faces", {"damp microclimate"}},
        {"FREEZE_THAW", "freezing and thawing cycles", {"frost"}},
        {"BIOLOGICAL_AGENTS", "plants, microorganisms, birds", {"vegetation pressure"}},
    };
    return table;
}

namespace {

template <typename Table>
LabelRef normalize_against(std::string_view raw, const Table& table,
                           std::string (*display)(const typename Table::value_type&)) {
    const std::string key = fold_key(raw);
    for (const auto& item : table) {
        if (fold_key(item.id) == key) return known_label(item.id);
        if (display && fold_key(display(item)) == key) return known_label(item.id);
        for (const auto& alias : item.aliases)
            if (fold_key(alias) == key) return known_label(item.id);
    }
    return unknown_label(std::string(raw));
}

} // namespace

LabelRef normalize_lithology(std::string_view raw) {
    return normalize_against(raw, lithology_classes(), nullptr);
}

LabelRef normalize_exposure(std::string_view raw) {
    return normalize_against(raw, exposure_factors(), nullptr);
}

std::optional<LithologyFamily> lithology_family(const std::string& id) {
    for (const auto& l : lithology_classes())
        if (l.id == id) return l.family;
    return std::nullopt;
}

} // namespace stonediag
