// Gated live smoke test. Requires a real endpoint and credential; skipped
// (exit 77) when they are absent, so the default suite never touches the
// network. One diagnose run must complete with finish_reason = stop and a
// persisted log of 2n+1 entries.
//
// Environment:
//   STONEDIAG_LIVE_CONFIG  path to a live-mode config file
//   STONEDIAG_LIVE_IMAGE   path to a case image
//   STONEDIAG_API_KEY      credential for the endpoint

#include "stonediag/config.hpp"
#include "stonediag/orchestrator.hpp"
#include "stonediag/serial.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace stonediag;

int main() {
    const char* config_path = std::getenv("STONEDIAG_LIVE_CONFIG");
    const char* image_path = std::getenv("STONEDIAG_LIVE_IMAGE");
    if (!config_path || !image_path) {
        std::cout << "SKIP: set STONEDIAG_LIVE_CONFIG and STONEDIAG_LIVE_IMAGE (plus the "
                     "credential) to run the live smoke test\n";
        return 77;
    }

    try {
        const MainConfig cfg = load_main_config(config_path);
        const PatternTaxonomy taxonomy = load_taxonomy_file(cfg.taxonomy_path);
        const Roster roster = load_roster_file(cfg.roster_path);
        std::optional<VectorStore> store;
        if (cfg.retrieval.enabled && !cfg.retrieval.store_path.empty())
            store = load_store_file(cfg.retrieval.store_path);

        auto backend = make_backend(cfg);
        UsageLedger ledger(cfg.backend.prices);
        Gateway gateway(*backend, ledger);
        RunConfig rc;
        rc.retrieval_enabled = cfg.retrieval.enabled && store.has_value();
        rc.retrieval_k = cfg.retrieval.k;
        rc.specialist_temperature = cfg.specialist_temperature;
        rc.coordinator_temperature = cfg.coordinator_temperature;
        rc.retry_limit = cfg.retry_limit;
        rc.phase2_order = cfg.phase2_order;
        rc.model_id = cfg.backend.model_id;
        rc.effort = cfg.backend.effort;
        Orchestrator orchestrator(gateway, taxonomy, roster, store ? &*store : nullptr, rc);

        CaseInput input;
        input.case_id = "live_smoke";
        input.image_path = image_path;
        const auto media = media_type_for_path(image_path);
        if (!media) {
            std::cerr << "FAIL: unsupported image type\n";
            return 1;
        }
        input.media_type = *media;

        const std::filesystem::path run_dir =
            std::filesystem::temp_directory_path() / "stonediag_live_smoke";
        const CaseResult result = orchestrator.run_case(input, run_dir);

        const std::size_t expected = 2 * roster.specialists().size() + 1;
        if (result.log.entries().size() != expected) {
            std::cerr << "FAIL: log has " << result.log.entries().size() << " entries, expected "
                      << expected << "\n";
            return 1;
        }
        std::cout << "PASS: live run complete, " << expected << " log entries, cost "
                  << result.usage.cost.display() << ", log under " << run_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "FAIL: " << e.what() << "\n";
        return 1;
    }
}
