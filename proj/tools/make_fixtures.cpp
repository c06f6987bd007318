// Regenerates the bundled sample taxonomy and the fixture corpus: case
// images, scripted transcripts, ground truth, knowledge-base store, and the
// prediction sets produced by running the real pipeline against the
// transcripts. Everything it writes is deterministic.
//
// Usage: make_fixtures <repo_root>

#include "stonediag/config.hpp"
#include "stonediag/errors.hpp"
#include "stonediag/eval.hpp"
#include "stonediag/orchestrator.hpp"
#include "stonediag/serial.hpp"
#include "stonediag/text.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace stonediag;

namespace {

// ---------------------------------------------------------------------------
// Sample taxonomy (ICOMOS-ISCS-style vocabulary)

PatternTaxonomy sample_taxonomy() {
    std::vector<PatternLabel> labels = {
        {"BLACK_CRUST", "Black crust", {"gypsum crust", "dark crust"}, {}},
        {"CRUST", "Crust", {"surface crust"}, {"BLACK_CRUST"}},
        {"SOILING", "Soiling", {"dirt deposit", "grime"}, {"BLACK_CRUST", "DEPOSIT"}},
        {"DEPOSIT", "Deposit", {"loose deposit", "surface deposit"}, {}},
        {"BIOLOGICAL_COLONIZATION",
         "Biological colonization",
         {"biocolonization", "microbial growth", "algal film"},
         {}},
        {"PLANT_GROWTH", "Plant growth", {"higher plants", "vegetation"},
         {"BIOLOGICAL_COLONIZATION"}},
        {"EFFLORESCENCE", "Efflorescence", {"salt efflorescence"}, {}},
        {"SUBFLORESCENCE", "Subflorescence", {"cryptoflorescence"}, {"EFFLORESCENCE"}},
        {"CRACK", "Crack", {"cracking", "fissure"}, {}},
        {"FRACTURE", "Fracture", {}, {"CRACK"}},
        {"SPALLING", "Spalling", {"spall"}, {}},
        {"CHIPPING", "Chipping", {"chip", "edge chipping"}, {}},
        {"DELAMINATION", "Delamination", {"exfoliation"}, {}},
        {"SCALING", "Scaling", {"contour scaling"}, {}},
        {"FLAKING", "Flaking", {}, {"SCALING"}},
        {"GRANULAR_DISINTEGRATION",
         "Granular disintegration",
         {"disaggregation", "sugaring", "sanding"},
         {}},
        {"POWDERING", "Powdering", {"chalking"}, {"GRANULAR_DISINTEGRATION"}},
        {"ALVEOLIZATION", "Alveolization", {"honeycomb weathering", "alveolar erosion"}, {}},
        {"EROSION", "Erosion", {"surface erosion", "loss of material"}, {}},
        {"PITTING", "Pitting", {}, {"EROSION"}},
        {"DISCOLOURATION",
         "Discolouration",
         {"discoloration", "chromatic alteration", "colour change"},
         {}},
        {"STAINING", "Staining", {"stain"}, {"DISCOLOURATION"}},
        {"MOISTURE_AREA", "Moisture area", {"damp area", "moist zone"}, {}},
        {"GRAFFITI", "Graffiti", {"spray paint"}, {}},
        {"MISSING_PART", "Missing part", {"lacuna", "loss"}, {}},
    };
    return PatternTaxonomy::from_labels("icomos-iscs-sample-1", std::move(labels));
}

// ---------------------------------------------------------------------------
// Minimal valid 1x1 RGB PNG, CRC and Adler computed, so the fixture images
// are real decodable files.

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static std::uint32_t table[256];
    static bool built = false;
    if (!built) {
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[n] = c;
        }
        built = true;
    }
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void push_u32(std::string& out, std::uint32_t v) {
    out += static_cast<char>((v >> 24) & 0xFF);
    out += static_cast<char>((v >> 16) & 0xFF);
    out += static_cast<char>((v >> 8) & 0xFF);
    out += static_cast<char>(v & 0xFF);
}

void push_chunk(std::string& out, const char type[4], const std::string& payload) {
    push_u32(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    push_u32(out, crc32(reinterpret_cast<const unsigned char*>(body.data()), body.size()));
}

std::string png_1x1(unsigned char r, unsigned char g, unsigned char b) {
    std::string out("\x89PNG\r\n\x1a\n", 8);

    std::string ihdr;
    push_u32(ihdr, 1); // width
    push_u32(ihdr, 1); // height
    ihdr += static_cast<char>(8); // bit depth
    ihdr += static_cast<char>(2); // color type: truecolor
    ihdr += std::string(3, '\0'); // compression, filter, interlace
    push_chunk(out, "IHDR", ihdr);

    // zlib stream with one stored deflate block: filter byte + RGB pixel.
    const unsigned char raw[4] = {0, r, g, b};
    std::uint32_t a = 1, bsum = 0;
    for (unsigned char byte : raw) {
        a = (a + byte) % 65521;
        bsum = (bsum + a) % 65521;
    }
    std::string idat;
    idat += '\x78';
    idat += '\x01';
    idat += '\x01'; // final, stored
    idat += '\x04';
    idat += '\x00'; // LEN = 4
    idat += '\xfb';
    idat += '\xff'; // NLEN
    idat.append(reinterpret_cast<const char*>(raw), 4);
    push_u32(idat, (bsum << 16) | a);
    push_chunk(out, "IDAT", idat);

    push_chunk(out, "IEND", "");
    return out;
}

// ---------------------------------------------------------------------------
// Scripted case content

struct CaseScript {
    std::string case_id;
    std::vector<StructuredAnalysis> analyses; // per specialist, roster order
    std::vector<std::vector<Commentary>> commentaries;
    DiagnosisDraft consensus;
    StructuredAnalysis baseline;
    std::vector<std::string> truth;
};

Finding finding(const PatternTaxonomy& tax, const std::string& term, std::string location,
                std::string rationale) {
    return {tax.normalize(term), std::move(location), std::move(rationale)};
}

StructuredAnalysis analysis(std::string agent, std::string element,
                            std::vector<std::string> exposure, const std::string& lith,
                            std::vector<Zone> zones, std::vector<Finding> findings,
                            std::string synthesis) {
    StructuredAnalysis a;
    a.agent_id = std::move(agent);
    a.context.element_type = std::move(element);
    a.context.exposure = std::move(exposure);
    a.context.lithology_hypothesis = normalize_lithology(lith);
    a.zones = std::move(zones);
    a.findings = std::move(findings);
    a.synthesis = std::move(synthesis);
    return a;
}

Commentary comment(std::string author, std::string target, std::vector<std::string> agree,
                   std::vector<std::string> disagree) {
    return {std::move(author), std::move(target), std::move(agree), std::move(disagree)};
}

std::vector<CaseScript> case_scripts(const PatternTaxonomy& tax) {
    std::vector<CaseScript> cases;

    { // case1: urban limestone portal
        CaseScript c;
        c.case_id = "case1";
        c.truth = {"BLACK_CRUST", "BIOLOGICAL_COLONIZATION", "EFFLORESCENCE", "CRACK"};
        c.analyses = {
            analysis("lithologist", "portal facade of dressed ashlar masonry", {"RAIN", "POLLUTION"},
                     "limestone",
                     {{"sheltered cornice underside", {"dark compact crust", "grey film"}},
                      {"plinth course", {"powdery white veil"}}},
                     {finding(tax, "black crust", "underside of the projecting cornice",
                              "compact dark layer on a rain-sheltered carbonate surface")},
                     "Fine-grained limestone ashlar; decay concentrates where rainwater is "
                     "excluded."),
            analysis("pathologist", "portal facade with projecting cornice", {"RAIN", "POLLUTION"},
                     "limestone",
                     {{"cornice underside", {"black compact crust"}},
                      {"north jamb base", {"green-black film"}},
                      {"plinth joints", {"white crystalline veil"}}},
                     {finding(tax, "black crust", "cornice underside",
                              "gypsum-bound dark crust typical of sheltered carbonate"),
                      finding(tax, "biological colonization", "shaded base of the north jamb",
                              "continuous green-black biological film"),
                      finding(tax, "efflorescence", "mortar joints of the plinth",
                              "white salt crystallization on the evaporation front")},
                     "Three distinct moisture regimes produce three distinct patterns."),
            analysis("environment", "street-facing portal in an urban canyon",
                     {"RAIN", "POLLUTION", "CONDENSATION"}, "limestone",
                     {{"runoff path below the cornice", {"dark streaks"}}},
                     {finding(tax, "biological colonization", "permanently damp base zone",
                              "the moisture regime favours algal growth"),
                      finding(tax, "staining", "runoff path below the cornice drip line",
                              "washed streaking consistent with intermittent runoff")},
                     "Shelter and runoff lines explain the whole distribution."),
            analysis("conservator", "portal facade with older repointing", {"RAIN", "RISING_DAMP"},
                     "limestone",
                     {{"repointed joints", {"white veil", "friable mortar"}}},
                     {finding(tax, "efflorescence", "cement-repointed joints",
                              "salts mobilized by the dense repair mortar"),
                      finding(tax, "staining", "below the bronze plaque",
                              "greenish wash-off staining"),
                      finding(tax, "black crust", "cornice soffit",
                              "the crust survives an earlier cleaning only in the soffit")},
                     "Previous repointing is the likely salt source at the plinth."),
        };
        c.commentaries = {
            {comment("lithologist", "pathologist",
                     {"the cornice crust sits on a sound carbonate substrate"}, {}),
             comment("lithologist", "environment",
                     {"the pollution load explains the crust chemistry"}, {}),
             comment("lithologist", "conservator", {},
                     {"the joint veil may be lime bloom from repointing rather than soluble "
                      "salts"})},
            {comment("pathologist", "lithologist",
                     {"substrate reading matches the crust morphology"}, {}),
             comment("pathologist", "environment",
                     {"the biological reading of the base film is correct"}, {}),
             comment("pathologist", "conservator",
                     {"efflorescence at the joints is salt, not lime bloom"}, {})},
            {comment("environment", "lithologist", {"shelter pattern fits the crust position"},
                     {}),
             comment("environment", "pathologist", {},
                     {"part of the base film could be soiling where runoff is constant"}),
             comment("environment", "conservator",
                     {"the damp base supports the rising-damp reading"}, {})},
            {comment("conservator", "lithologist", {"no consolidant residue on the ashlar"}, {}),
             comment("conservator", "pathologist",
                     {"pattern set is consistent with what the joints show"}, {}),
             comment("conservator", "environment", {},
                     {"the streaking below the plaque is metallic wash-off, not biological"})},
        };
        c.consensus.description =
            "Urban limestone portal; decay is governed by rain shelter and pollution.";
        c.consensus.confidence = Confidence::High;
        c.consensus.findings = {
            finding(tax, "black crust", "underside of the projecting cornice",
                    "three specialists concur on a gypsum-type crust"),
            finding(tax, "biological colonization", "damp shaded base of the north jamb",
                    "pathology and exposure analyses agree"),
            finding(tax, "efflorescence", "mortar joints of the plinth",
                    "salt source identified in the repair mortar"),
            finding(tax, "staining", "runoff path below the cornice",
                    "streaking distinct from the crust")};
        c.consensus.divergences_resolved = {
            "the grey film and the black crust refer to the same cornice layer",
            "base darkening attributed to biology rather than soot, following the "
            "environmental analysis"};
        c.baseline =
            analysis("baseline", "stone facade", {"RAIN"}, "limestone", {},
                     {finding(tax, "soiling", "facade overall", "general darkening"),
                      finding(tax, "crack", "lintel", "single linear discontinuity")},
                     "Single-pass review without grounding.");
        cases.push_back(std::move(c));
    }

    { // case2: sandstone pier under wind and salt
        CaseScript c;
        c.case_id = "case2";
        c.truth = {"GRANULAR_DISINTEGRATION", "ALVEOLIZATION", "DISCOLOURATION"};
        c.analyses = {
            analysis("lithologist", "free-standing sandstone pier", {"WIND", "RAIN"}, "sandstone",
                     {{"windward corner", {"honeycomb cavities", "loose sand"}}},
                     {finding(tax, "granular disintegration", "windward arris at hand height",
                              "sand grains detach under light touch"),
                      finding(tax, "alveolization", "windward corner",
                              "coalescing cavities with sharp septa")},
                     "Clay-bearing sandstone; the cement controls the decay."),
            analysis("pathologist", "sandstone pier with carved capital", {"WIND"}, "sandstone",
                     {{"south-west corner", {"honeycomb cavities"}},
                      {"band under the capital", {"yellow-brown front"}}},
                     {finding(tax, "alveolization", "south-west corner",
                              "classic honeycomb morphology"),
                      finding(tax, "chromatic alteration", "upper band under the capital",
                              "yellow-brown alteration front")},
                     "Two active patterns, both wind-conditioned."),
            analysis("environment", "exposed pier on an open esplanade", {"WIND", "MARINE_AEROSOL"},
                     "sandstone", {{"windward face", {"cavities", "salt glaze"}}},
                     {finding(tax, "alveolization", "salt-laden windward face",
                              "wind plus salt cycling sustains alveolar growth")},
                     "Marine aerosol reaches the site on strong westerlies."),
            analysis("conservator", "pier with no visible earlier treatment", {"WIND"}, "sandstone",
                     {{"upper band", {"uniform colour change"}}},
                     {finding(tax, "discolouration", "upper band under the capital",
                              "uniform change unrelated to any past consolidant")},
                     "No intervention history; the surface is original."),
        };
        c.commentaries = {
            {comment("lithologist", "pathologist", {"honeycomb reading is correct"}, {}),
             comment("lithologist", "environment", {"salt supply explains the cavity depth"}, {}),
             comment("lithologist", "conservator", {"agreed, no consolidant sheen"}, {})},
            {comment("pathologist", "lithologist",
                     {"grain detachment confirms weak clay cement"}, {}),
             comment("pathologist", "environment", {"wind-salt coupling matches the corner"},
                     {}),
             comment("pathologist", "conservator",
                     {"the chromatic front is natural weathering"}, {})},
            {comment("environment", "lithologist", {"windward concentration fits"}, {}),
             comment("environment", "pathologist", {"distribution matches the wind rose"}, {}),
             comment("environment", "conservator", {},
                     {"the upper band may simply be less rain-washed, not altered"})},
            {comment("conservator", "lithologist", {"surface is untreated as you assumed"}, {}),
             comment("conservator", "pathologist", {"colour front is sharp and consistent"}, {}),
             comment("conservator", "environment", {"no shelter effect on the upper band"}, {})},
        };
        c.consensus.description =
            "Exposed sandstone pier; wind and salt drive loss, with a chromatic front above.";
        c.consensus.confidence = Confidence::Medium;
        c.consensus.findings = {
            finding(tax, "granular disintegration", "windward arris at hand height",
                    "tactile grain loss reported by the lithologist"),
            finding(tax, "alveolization", "windward corner and south-west face",
                    "three specialists concur"),
            finding(tax, "discolouration", "upper band under the capital",
                    "retained as a true chromatic alteration after discussion")};
        c.consensus.divergences_resolved = {
            "the upper band is discolouration, not differential rain washing"};
        c.baseline = analysis("baseline", "stone pier", {"WIND"}, "sandstone", {},
                              {finding(tax, "discolouration", "upper band", "colour shift")},
                              "Single-pass review without grounding.");
        cases.push_back(std::move(c));
    }

    { // case3: granite doorway at street level
        CaseScript c;
        c.case_id = "case3";
        c.truth = {"SPALLING", "CHIPPING", "DEPOSIT", "MOISTURE_AREA", "PLANT_GROWTH"};
        c.analyses = {
            analysis("lithologist", "granite doorway at street level", {"RAIN", "RISING_DAMP"},
                     "granite", {{"plinth course", {"shell-like losses"}}},
                     {finding(tax, "spalling", "plinth course",
                              "shallow shells detach along microcracks")},
                     "Medium-grained granite; damp base drives the mechanical losses."),
            analysis("pathologist", "doorway with polished jambs", {"RAIN"}, "granite",
                     {{"plinth blocks", {"fresh fracture faces"}},
                      {"door jamb arrises", {"edge losses", "surface gloss"}}},
                     {finding(tax, "spalling", "plinth blocks",
                              "scale-like losses with fresh fracture faces"),
                      finding(tax, "chipping", "door jamb arrises", "mechanical edge losses"),
                      finding(tax, "weathered sheen", "jamb face",
                              "undetermined surface gloss")},
                     "One pattern remains undetermined pending discussion."),
            analysis("environment", "doorway facing dense traffic", {"POLLUTION", "RISING_DAMP"},
                     "granite",
                     {{"lower band", {"coarse dark particles"}},
                      {"base zone", {"damp front", "tide mark"}}},
                     {finding(tax, "deposit", "traffic-facing lower band",
                              "coarse dark particulate accumulation"),
                      finding(tax, "moisture area", "base zone up to one metre",
                              "persistent damp front with a tide mark")},
                     "Street traffic and ground moisture dominate the exposure."),
            analysis("conservator", "doorway with old mortar repairs at the plinth",
                     {"RAIN", "RISING_DAMP"}, "granite",
                     {{"lower cornice ledges", {"loose particles over repairs"}}},
                     {finding(tax, "chipping", "door jamb arrises",
                              "impact chips from vehicle traffic"),
                      finding(tax, "deposit", "ledges of the lower cornice",
                              "loose particulate over old repairs")},
                     "Repairs are stable; losses are recent and mechanical."),
        };
        c.commentaries = {
            {comment("lithologist", "pathologist",
                     {"spalling morphology matches granite microcracking"},
                     {"the jamb sheen is likely polish wear, not a deterioration pattern"}),
             comment("lithologist", "environment", {"damp front explains the spall depth"}, {}),
             comment("lithologist", "conservator", {"edge chips postdate the repairs"}, {})},
            {comment("pathologist", "lithologist", {"microcrack reading is sound"}, {}),
             comment("pathologist", "environment", {"deposit gradient fits traffic"}, {}),
             comment("pathologist", "conservator", {"chipping attribution to impacts agreed"},
                     {})},
            {comment("environment", "lithologist", {"base moisture confirmed by the tide mark"},
                     {}),
             comment("environment", "pathologist", {},
                     {"faint green traces at the damp base suggest incipient biological growth "
                      "you did not record"}),
             comment("environment", "conservator", {"ledge deposits match the traffic source"},
                     {})},
            {comment("conservator", "lithologist", {"no consolidant on the plinth"}, {}),
             comment("conservator", "pathologist", {"the sheen is wear polish, drop it"}, {}),
             comment("conservator", "environment", {"agree the base stays damp year-round"},
                     {})},
        };
        c.consensus.description =
            "Granite doorway; mechanical losses over a damp, soiled street-level base.";
        c.consensus.confidence = Confidence::Low;
        c.consensus.findings = {
            finding(tax, "spalling", "plinth course",
                    "lithologist and pathologist concur on shell detachment"),
            finding(tax, "chipping", "door jamb arrises",
                    "independent mechanical reading by two specialists"),
            finding(tax, "deposit", "traffic-facing lower band",
                    "particulate source identified as street traffic"),
            finding(tax, "biological colonization", "damp base zone",
                    "inferred from the green traces raised during discussion")};
        c.consensus.divergences_resolved = {
            "the jamb sheen was dropped: wear polish, not deterioration",
            "green traces at the base retained as incipient biological colonization"};
        c.baseline = analysis(
            "baseline", "stone doorway", {"RAIN"}, "granite", {},
            {finding(tax, "spalling", "plinth", "shell detachment"),
             finding(tax, "graffiti", "street level", "paint marks"),
             finding(tax, "efflorescence", "base", "white veil")},
            "Single-pass review without grounding.");
        cases.push_back(std::move(c));
    }

    return cases;
}

// Scripted usage per phase; one case sums to 10000 conversational tokens
// (phases 1-2, prompt+completion) plus a sub-1k structured consensus reply.
constexpr long long kIndividualPrompt = 700, kIndividualCompletion = 500;
constexpr long long kDiscussionPrompt = 900, kDiscussionCompletion = 400;
constexpr long long kConsensusPrompt = 2500, kConsensusCompletion = 600;
constexpr long long kBaselinePrompt = 150, kBaselineCompletion = 250;

std::string transcript_line(const std::string& case_id, const std::string& agent_id,
                            const std::string& phase, const std::string& reply,
                            long long prompt_tokens, long long completion_tokens) {
    ordered_json j;
    j["case_id"] = case_id;
    j["agent_id"] = agent_id;
    j["phase"] = phase;
    j["reply"] = reply;
    j["prompt_tokens"] = prompt_tokens;
    j["completion_tokens"] = completion_tokens;
    return j.dump() + "\n";
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <repo_root>\n";
        return 2;
    }
    const fs::path root = argv[1];
    const fs::path data = root / "data";
    const fs::path fixtures = root / "fixtures";

    try {
        fs::create_directories(data);
        fs::create_directories(fixtures / "cases");
        fs::create_directories(fixtures / "predictions_baseline");
        fs::create_directories(fixtures / "predictions_agentic");

        // Sample taxonomy, canonical bytes via the library serializer.
        const PatternTaxonomy taxonomy = sample_taxonomy();
        save_taxonomy_file(taxonomy, (data / "taxonomy.jsonl").string());

        // Case images.
        write_file((fixtures / "cases" / "case1.png").string(), png_1x1(120, 100, 80));
        write_file((fixtures / "cases" / "case2.png").string(), png_1x1(180, 160, 120));
        write_file((fixtures / "cases" / "case3.png").string(), png_1x1(90, 90, 95));

        const std::vector<CaseScript> scripts = case_scripts(taxonomy);

        // Transcripts: canonical reply renderings plus scripted usage.
        std::string transcripts, transcripts_broken;
        for (const CaseScript& c : scripts) {
            for (const StructuredAnalysis& a : c.analyses) {
                const std::string line =
                    transcript_line(c.case_id, a.agent_id, "individual",
                                    render_analysis_reply(a), kIndividualPrompt,
                                    kIndividualCompletion);
                transcripts += line;
                transcripts_broken += line;
            }
            for (const auto& commentaries : c.commentaries) {
                const std::string agent = commentaries.front().agent_id;
                const std::string reply = render_commentary_reply(commentaries);
                transcripts += transcript_line(c.case_id, agent, "discussion", reply,
                                               kDiscussionPrompt, kDiscussionCompletion);
                // Broken variant: the pathologist's discussion reply never
                // closes its block, so parsing fails on both attempts.
                std::string broken_reply = reply;
                if (c.case_id == "case1" && agent == "pathologist") {
                    const std::size_t pos = broken_reply.rfind(kBlockClose);
                    broken_reply = broken_reply.substr(0, pos);
                }
                transcripts_broken += transcript_line(c.case_id, agent, "discussion",
                                                      broken_reply, kDiscussionPrompt,
                                                      kDiscussionCompletion);
            }
            const std::string consensus_line = transcript_line(
                c.case_id, "coordinator", "consensus", render_diagnosis_reply(c.consensus),
                kConsensusPrompt, kConsensusCompletion);
            transcripts += consensus_line;
            transcripts_broken += consensus_line;
            const std::string baseline_reply = render_analysis_reply(c.baseline);
            transcripts += transcript_line(c.case_id, "baseline", "baseline", baseline_reply,
                                           kBaselinePrompt, kBaselineCompletion);
            // Broken variant: case1's baseline block is unclosed too.
            std::string broken_baseline = baseline_reply;
            if (c.case_id == "case1")
                broken_baseline = broken_baseline.substr(0, broken_baseline.rfind(kBlockClose));
            transcripts_broken += transcript_line(c.case_id, "baseline", "baseline",
                                                  broken_baseline, kBaselinePrompt,
                                                  kBaselineCompletion);
        }
        write_file((fixtures / "transcripts.jsonl").string(), transcripts);
        write_file((fixtures / "transcripts_broken.jsonl").string(), transcripts_broken);

        // Ground truth.
        std::vector<GroundTruthCase> corpus;
        for (const CaseScript& c : scripts)
            corpus.push_back({c.case_id, "cases/" + c.case_id + ".png", c.truth, ""});
        write_file((fixtures / "ground_truth.jsonl").string(), save_ground_truth(corpus));

        // Knowledge-base store from the bundled documents. Embeddings go
        // through a Gateway so the bytes match what kb-ingest produces.
        const MainConfig cfg = load_main_config((fixtures / "config.mock.json").string());
        MockBackend embedder(cfg.backend.embedding_dimension, {});
        UsageLedger embed_ledger;
        Gateway embed_gateway(embedder, embed_ledger);
        StoreMetadata meta{cfg.backend.embedding_model_id, "1970-01-01T00:00:00Z"};
        std::vector<EmbeddedChunk> embedded;
        for (const char* doc : {"patterns.txt", "lithology.txt", "exposure.txt"}) {
            const fs::path p = data / "kb" / doc;
            for (DocumentChunk& chunk :
                 chunk_document(fs::path(doc).stem().string(), read_file(p.string()),
                                cfg.retrieval.target_tokens, cfg.retrieval.overlap_tokens)) {
                std::vector<double> vec = embed_gateway.embed_text(chunk.text);
                embedded.push_back({std::move(chunk), std::move(vec)});
            }
        }
        VectorStore store(cfg.backend.embedding_dimension, meta);
        for (EmbeddedChunk& e : embedded) store.upsert(std::move(e));
        save_store_file(store, (fixtures / "kb.store").string());

        // Prediction sets, produced by the real pipeline on the transcripts.
        const Roster roster = load_roster_file(cfg.roster_path);
        MockBackend backend = MockBackend::load_file((fixtures / "transcripts.jsonl").string(),
                                                     cfg.backend.embedding_dimension);
        UsageLedger ledger(cfg.backend.prices);
        Gateway gateway(backend, ledger);
        RunConfig rc;
        rc.retrieval_enabled = cfg.retrieval.enabled;
        rc.retrieval_k = cfg.retrieval.k;
        rc.specialist_temperature = cfg.specialist_temperature;
        rc.coordinator_temperature = cfg.coordinator_temperature;
        rc.retry_limit = cfg.retry_limit;
        rc.phase2_order = cfg.phase2_order;
        rc.model_id = cfg.backend.model_id;
        rc.effort = cfg.backend.effort;
        Orchestrator orchestrator(gateway, taxonomy, roster, &store, rc);

        for (const CaseScript& c : scripts) {
            CaseInput input;
            input.case_id = c.case_id;
            input.image_path = (fixtures / "cases" / (c.case_id + ".png")).string();
            input.media_type = "image/png";
            const CaseResult result = orchestrator.run_case(input, std::nullopt);
            write_file((fixtures / "predictions_agentic" / (c.case_id + ".predictions.json"))
                           .string(),
                       serialize_predictions(
                           {c.case_id, "agentic", result.diagnosis.findings}));

            const CallContext ctx{c.case_id, "baseline", "baseline"};
            ChatRequest request;
            request.model_id = cfg.backend.model_id;
            request.messages.push_back(
                {Role::User, {TextPart{render_baseline_prompt(kDefaultCasePrompt)}}});
            const ChatResponse reply = gateway.complete(ctx, request);
            const StructuredAnalysis parsed =
                parse_structured_analysis(reply.text, taxonomy, "baseline");
            write_file((fixtures / "predictions_baseline" / (c.case_id + ".predictions.json"))
                           .string(),
                       serialize_predictions({c.case_id, "baseline", parsed.findings}));
        }

        std::cout << "fixtures regenerated under " << fixtures.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures failed: " << e.what() << "\n";
        return 1;
    }
}
