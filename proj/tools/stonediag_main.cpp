// stonediag: multi-agent stone-deterioration diagnosis over an
// OpenAI-compatible backend, with a scripted mock mode for offline runs.
//
// Subcommands: kb-ingest, diagnose, baseline, eval.
// Exit codes: 0 success, 2 input/configuration error, 3 run/parse failure.

#include "stonediag/config.hpp"
#include "stonediag/errors.hpp"
#include "stonediag/eval.hpp"
#include "stonediag/orchestrator.hpp"
#include "stonediag/serial.hpp"
#include "stonediag/text.hpp"

#include "CLI11.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace stonediag;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string roster_override;
    std::string store_override;
    std::string transcript_override;
    std::string out_override;
    int k_override = 0;
    std::string order_override; // comma-separated specialist ids
};

MainConfig load_config_with_overrides(const CommonFlags& flags) {
    MainConfig cfg = load_main_config(flags.config_path);
    if (!flags.roster_override.empty()) cfg.roster_path = flags.roster_override;
    if (!flags.store_override.empty()) cfg.retrieval.store_path = flags.store_override;
    if (!flags.transcript_override.empty())
        cfg.backend.transcript_path = flags.transcript_override;
    if (!flags.out_override.empty()) cfg.output_dir = flags.out_override;
    if (flags.k_override > 0) cfg.retrieval.k = flags.k_override;
    if (!flags.order_override.empty()) cfg.phase2_order = split_trimmed(flags.order_override, ',');
    return cfg;
}

std::string run_stamp(bool deterministic) {
    if (deterministic) return "19700101-000000";
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

std::string case_id_for_image(const std::string& image_path) {
    return fs::path(image_path).stem().string();
}

RunConfig run_config_from(const MainConfig& cfg) {
    RunConfig rc;
    rc.retrieval_enabled = cfg.retrieval.enabled;
    rc.retrieval_k = cfg.retrieval.k;
    rc.specialist_temperature = cfg.specialist_temperature;
    rc.coordinator_temperature = cfg.coordinator_temperature;
    rc.retry_limit = cfg.retry_limit;
    rc.phase2_order = cfg.phase2_order;
    rc.model_id = cfg.backend.model_id;
    rc.effort = cfg.backend.effort;
    return rc;
}

void print_usage_line(const LedgerTotals& totals) {
    std::cout << "usage: " << totals.prompt_tokens << " prompt + " << totals.completion_tokens
              << " completion tokens, cost " << totals.cost.display() << "\n";
}

int cmd_kb_ingest(const CommonFlags& flags, const std::vector<std::string>& sources) {
    MainConfig cfg = load_config_with_overrides(flags);
    const std::string out_path = cfg.retrieval.store_path;
    if (out_path.empty())
        throw ConfigError("kb-ingest: no output store path (use --kb or retrieval.store)");

    auto backend = make_backend(cfg);
    UsageLedger ledger(cfg.backend.prices);
    Gateway gateway(*backend, ledger);

    std::vector<DocumentChunk> chunks;
    for (const std::string& source : sources) {
        const std::string text = read_file(source);
        const std::string source_id = fs::path(source).stem().string();
        for (DocumentChunk& chunk :
             chunk_document(source_id, text, cfg.retrieval.target_tokens,
                            cfg.retrieval.overlap_tokens))
            chunks.push_back(std::move(chunk));
    }
    if (chunks.empty()) throw InputError("kb-ingest: sources contained no text");

    StoreMetadata meta;
    meta.embedding_model_id = cfg.backend.embedding_model_id;
    meta.created_at =
        gateway.deterministic() ? "1970-01-01T00:00:00Z" : run_stamp(false);
    std::vector<double> first = gateway.embed_text(chunks.front().text);
    VectorStore store(static_cast<int>(first.size()), meta);
    store.upsert({chunks.front(), std::move(first)});
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        std::vector<double> vec = gateway.embed_text(chunks[i].text);
        store.upsert({chunks[i], std::move(vec)});
    }

    long long token_estimate = 0;
    for (const EmbeddedChunk& e : store.entries()) token_estimate += e.chunk.approx_tokens;

    fs::create_directories(fs::path(out_path).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(out_path).parent_path());
    save_store_file(store, out_path);
    std::cout << "ingested " << store.size() << " chunks (~" << token_estimate
              << " tokens) from " << sources.size() << " documents into " << out_path << "\n";
    return 0;
}

int cmd_diagnose(const CommonFlags& flags, const std::string& image_path,
                 const std::string& prompt_override) {
    MainConfig cfg = load_config_with_overrides(flags);
    if (!fs::exists(image_path)) throw InputError("diagnose: image not found: " + image_path);
    const auto media_type = media_type_for_path(image_path);
    if (!media_type)
        throw InputError("diagnose: unsupported image type for " + image_path +
                         " (use .png, .jpg or .jpeg)");

    const PatternTaxonomy taxonomy = load_taxonomy_file(cfg.taxonomy_path);
    const Roster roster = load_roster_file(cfg.roster_path);

    std::optional<VectorStore> store;
    if (cfg.retrieval.enabled) {
        if (cfg.retrieval.store_path.empty())
            throw ConfigError("diagnose: retrieval is enabled but no store is configured");
        store = load_store_file(cfg.retrieval.store_path);
        // Cross-model similarity is meaningless; refuse mixed embeddings.
        if (store->metadata().embedding_model_id != cfg.backend.embedding_model_id)
            throw ConfigError("diagnose: store " + cfg.retrieval.store_path +
                              " was embedded with '" + store->metadata().embedding_model_id +
                              "' but the backend embeds with '" +
                              cfg.backend.embedding_model_id + "'");
    }

    auto backend = make_backend(cfg);
    UsageLedger ledger(cfg.backend.prices);
    Gateway gateway(*backend, ledger);
    Orchestrator orchestrator(gateway, taxonomy, roster, store ? &*store : nullptr,
                              run_config_from(cfg));

    CaseInput input;
    input.case_id = case_id_for_image(image_path);
    input.image_path = image_path;
    input.media_type = *media_type;
    input.case_prompt = prompt_override;

    const fs::path out_root = cfg.output_dir;
    const fs::path run_dir =
        out_root / (input.case_id + "_" + run_stamp(gateway.deterministic()));

    const CaseResult result = orchestrator.run_case(input, run_dir);

    write_file((run_dir / "diagnosis.json").string(), serialize_diagnosis(result.diagnosis));
    PredictionsDoc predictions{input.case_id, "agentic", result.diagnosis.findings};
    const std::string predictions_bytes = serialize_predictions(predictions);
    write_file((run_dir / "predictions.json").string(), predictions_bytes);
    fs::create_directories(out_root / "predictions_agentic");
    write_file((out_root / "predictions_agentic" / (input.case_id + ".predictions.json"))
                   .string(),
               predictions_bytes);

    std::cout << "case: " << input.case_id << "\n";
    std::cout << "confidence: " << confidence_name(result.diagnosis.confidence) << "\n";
    std::cout << "findings (" << result.diagnosis.findings.size() << "):\n";
    for (std::size_t i = 0; i < result.diagnosis.findings.size(); ++i) {
        const Finding& f = result.diagnosis.findings[i];
        std::cout << "  - " << f.pattern.value << (f.pattern.known ? "" : " (unrecognized)")
                  << " @ " << f.location;
        if (i < result.diagnosis.provenance.size()) {
            const auto& supporters = result.diagnosis.provenance[i];
            if (supporters.empty()) {
                std::cout << " [coordinator-added]";
            } else {
                std::cout << " ["
                          << join(std::vector<std::string>(supporters.begin(), supporters.end()),
                                  ", ")
                          << "]";
            }
        }
        std::cout << "\n";
    }
    print_usage_line(result.usage);
    std::cout << "artifacts: " << run_dir.string() << "\n";
    return 0;
}

int cmd_baseline(const CommonFlags& flags, const std::string& image_path,
                 const std::string& prompt_override) {
    MainConfig cfg = load_config_with_overrides(flags);
    if (!fs::exists(image_path)) throw InputError("baseline: image not found: " + image_path);
    const auto media_type = media_type_for_path(image_path);
    if (!media_type)
        throw InputError("baseline: unsupported image type for " + image_path +
                         " (use .png, .jpg or .jpeg)");

    const PatternTaxonomy taxonomy = load_taxonomy_file(cfg.taxonomy_path);
    auto backend = make_backend(cfg);
    UsageLedger ledger(cfg.backend.prices);
    Gateway gateway(*backend, ledger);

    const std::string case_id = case_id_for_image(image_path);
    const std::string case_prompt =
        prompt_override.empty() ? kDefaultCasePrompt : prompt_override;

    ChatRequest request;
    request.model_id = cfg.backend.model_id;
    request.temperature = cfg.specialist_temperature;
    request.effort = cfg.backend.effort;
    request.messages.push_back({Role::User,
                                {TextPart{render_baseline_prompt(case_prompt)},
                                 ImagePart{*media_type, base64_encode(read_file(image_path))}}});

    const CallContext ctx{case_id, "baseline", "baseline"};
    StructuredAnalysis analysis;
    ChatResponse response = gateway.complete(ctx, request);
    for (int attempt = 0;; ++attempt) {
        try {
            analysis = parse_structured_analysis(response.text, taxonomy, "baseline");
            break;
        } catch (const MalformedOutputError& e) {
            if (attempt >= cfg.retry_limit) throw;
            request.messages.push_back({Role::Assistant, {TextPart{response.text}}});
            request.messages.push_back(
                {Role::User,
                 {TextPart{std::string("Your reply could not be parsed: ") + e.what() +
                           "\nResend your full reply with a corrected output block."}}});
            response = gateway.complete(ctx, request);
        }
    }

    const fs::path out_dir = fs::path(cfg.output_dir) / "predictions_baseline";
    fs::create_directories(out_dir);
    const fs::path out_path = out_dir / (case_id + ".predictions.json");
    write_file(out_path.string(),
               serialize_predictions({case_id, "baseline", analysis.findings}));

    std::cout << "case: " << case_id << " (baseline)\n";
    std::cout << "findings (" << analysis.findings.size() << "):\n";
    for (const Finding& f : analysis.findings)
        std::cout << "  - " << f.pattern.value << (f.pattern.known ? "" : " (unrecognized)")
                  << " @ " << f.location << "\n";
    print_usage_line(ledger.totals_for_case(case_id));
    std::cout << "wrote " << out_path.string() << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& truth_path,
             const std::vector<std::string>& prediction_specs, int concurrency) {
    MainConfig cfg = load_config_with_overrides(flags);
    const PatternTaxonomy taxonomy = load_taxonomy_file(cfg.taxonomy_path);
    const std::vector<GroundTruthCase> corpus = load_ground_truth_file(truth_path, taxonomy);
    if (corpus.empty()) throw InputError("eval: ground-truth corpus is empty");

    // name=dir pairs, evaluated in the order given.
    std::vector<std::pair<std::string, std::string>> systems;
    for (const std::string& spec : prediction_specs) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
            throw ConfigError("eval: --predictions expects NAME=DIR, got '" + spec + "'");
        systems.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }

    // Check every case has a predictions document before scoring anything.
    std::vector<std::string> missing;
    for (const auto& [name, dir] : systems) {
        for (const GroundTruthCase& c : corpus) {
            const fs::path p = fs::path(dir) / (c.case_id + ".predictions.json");
            if (!fs::exists(p)) missing.push_back(name + ":" + c.case_id);
        }
    }
    if (!missing.empty())
        throw InputError("eval: missing predictions for " + join(missing, ", "));

#ifdef _OPENMP
    if (concurrency > 0) omp_set_num_threads(concurrency);
#else
    (void)concurrency;
#endif

    std::vector<SystemReport> reports;
    std::string per_image_csv;
    ordered_json matches = ordered_json::array();
    for (const auto& [name, dir] : systems) {
        std::vector<MatchOutcome> outcomes(corpus.size());
        std::vector<std::vector<Finding>> findings(corpus.size());
        std::vector<std::string> errors(corpus.size());
        const auto n = static_cast<std::ptrdiff_t>(corpus.size());
        const std::string dir_copy = dir; // OpenMP cannot capture structured bindings
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            try {
                const fs::path p =
                    fs::path(dir_copy) / (corpus[idx].case_id + ".predictions.json");
                const PredictionsDoc doc = parse_predictions(read_file(p.string()), p.string());
                findings[idx] = doc.findings;
                outcomes[idx] = match_findings(doc.findings, corpus[idx], taxonomy);
            } catch (const std::exception& e) {
                errors[idx] = e.what();
            }
        }
        for (const std::string& err : errors)
            if (!err.empty()) throw InputError("eval: " + err);

        reports.push_back({name, aggregate(outcomes)});
        per_image_csv += emit_per_image_csv(name, per_image_summary(outcomes));

        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const MatchOutcome& o = outcomes[i];
            ordered_json m;
            m["system"] = name;
            m["case_id"] = o.case_id;
            m["tp_pairs"] = ordered_json::array();
            for (const TpPair& p : o.pairs)
                m["tp_pairs"].push_back({{"prediction_index", p.prediction_index},
                                         {"truth_id", p.truth_id},
                                         {"location", findings[i][p.prediction_index].location}});
            m["false_positives"] = ordered_json::array();
            for (std::size_t idx : o.unmatched_predictions)
                m["false_positives"].push_back({{"prediction_index", idx},
                                                {"pattern", findings[i][idx].pattern.value},
                                                {"location", findings[i][idx].location}});
            m["ambiguous"] = ordered_json::array();
            for (std::size_t idx : o.ambiguous_predictions)
                m["ambiguous"].push_back({{"prediction_index", idx},
                                          {"pattern", findings[i][idx].pattern.value},
                                          {"location", findings[i][idx].location}});
            m["missed"] = o.unmatched_truths;
            matches.push_back(std::move(m));
        }
    }

    const fs::path out_root = cfg.output_dir;
    fs::create_directories(out_root);
    const std::string table = emit_report(reports, ReportFormat::TableText);
    write_file((out_root / "report.txt").string(), table);
    write_file((out_root / "report.csv").string(),
               emit_report(reports, ReportFormat::DelimitedValues));
    write_file((out_root / "per_image.csv").string(), per_image_csv);
    std::string matches_bytes;
    for (const auto& m : matches) {
        matches_bytes += m.dump();
        matches_bytes += '\n';
    }
    write_file((out_root / "matches.jsonl").string(), matches_bytes);

    std::cout << table;
    std::cout << "wrote " << (out_root / "report.txt").string() << ", report.csv, per_image.csv, "
              << "matches.jsonl\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-agent stone deterioration diagnosis"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::vector<std::string> sources;
    std::string image_path, prompt_override, truth_path;
    std::vector<std::string> prediction_specs;
    int concurrency = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config_path, "main config file")->required();
        sub->add_option("--agents", flags.roster_override, "roster config override");
        sub->add_option("--kb", flags.store_override, "vector store path override");
        sub->add_option("--mock-transcript", flags.transcript_override,
                        "mock transcript override");
        sub->add_option("--out", flags.out_override, "output directory override");
        sub->add_option("--k", flags.k_override, "retrieval depth override");
        sub->add_option("--order", flags.order_override,
                        "phase-2 order as comma-separated specialist ids");
    };

    CLI::App* ingest = app.add_subcommand("kb-ingest", "chunk, embed and store documents");
    add_common(ingest);
    ingest->add_option("sources", sources, "source documents")->required();

    CLI::App* diagnose = app.add_subcommand("diagnose", "run the multi-agent workflow on an image");
    add_common(diagnose);
    diagnose->add_option("image", image_path, "case image (.png/.jpg)")->required();
    diagnose->add_option("--prompt", prompt_override, "case prompt override");

    CLI::App* baseline =
        app.add_subcommand("baseline", "single-shot foundational-model arm, no agents, no RAG");
    add_common(baseline);
    baseline->add_option("image", image_path, "case image (.png/.jpg)")->required();
    baseline->add_option("--prompt", prompt_override, "case prompt override");

    CLI::App* eval = app.add_subcommand("eval", "score prediction sets against ground truth");
    add_common(eval);
    eval->add_option("--truth", truth_path, "ground-truth corpus file")->required();
    eval->add_option("--predictions", prediction_specs,
                     "NAME=DIR prediction set (repeatable)")
        ->required();
    eval->add_option("--concurrency", concurrency, "parallel case scoring limit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_kb_ingest(flags, sources);
        if (diagnose->parsed()) return cmd_diagnose(flags, image_path, prompt_override);
        if (baseline->parsed()) return cmd_baseline(flags, image_path, prompt_override);
        if (eval->parsed()) return cmd_eval(flags, truth_path, prediction_specs, concurrency);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MisuseError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
