#include "stonediag/config.hpp"

#include "stonediag/errors.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

const char* const kDefaultApiKeyEnv = "STONEDIAG_API_KEY";

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& maybe_relative) {
    if (maybe_relative.empty()) return maybe_relative;
    std::filesystem::path p(maybe_relative);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base / p).lexically_normal().string();
}

std::optional<Effort> parse_effort(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "low") return Effort::Low;
    if (s == "medium") return Effort::Medium;
    if (s == "high") return Effort::High;
    throw ConfigError("config: effort must be low, medium or high, got '" + s + "'");
}

} // namespace

MainConfig load_main_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("config: cannot open " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw FileParseError(path + ": " + e.what());
    }

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    MainConfig cfg;
    try {
        const auto& backend = j.at("backend");
        const std::string mode = backend.at("mode").get<std::string>();
        if (mode == "mock") cfg.backend.mode = BackendSection::Mode::Mock;
        else if (mode == "live") cfg.backend.mode = BackendSection::Mode::Live;
        else throw ConfigError("config: backend.mode must be 'mock' or 'live', got '" + mode + "'");

        cfg.backend.endpoint = backend.value("endpoint", std::string());
        cfg.backend.model_id = backend.at("model_id").get<std::string>();
        cfg.backend.embedding_model_id = backend.value("embedding_model_id", std::string());
        cfg.backend.embedding_dimension = backend.value("embedding_dimension", 64);
        cfg.backend.effort = parse_effort(backend.value("effort", std::string()));
        cfg.backend.transcript_path = resolve(base, backend.value("transcript", std::string()));
        cfg.backend.api_key_env = backend.value("api_key_env", std::string(kDefaultApiKeyEnv));
        if (backend.contains("price_table")) {
            const auto& prices = backend.at("price_table");
            cfg.backend.prices.prompt_pico_per_token = PriceTable::parse_rate_per_million(
                prices.at("prompt_per_1m").get<std::string>());
            cfg.backend.prices.completion_pico_per_token = PriceTable::parse_rate_per_million(
                prices.at("completion_per_1m").get<std::string>());
        }

        cfg.taxonomy_path = resolve(base, j.at("taxonomy").get<std::string>());
        cfg.roster_path = resolve(base, j.at("roster").get<std::string>());

        if (j.contains("retrieval")) {
            const auto& r = j.at("retrieval");
            cfg.retrieval.enabled = r.value("enabled", true);
            cfg.retrieval.k = r.value("k", 8);
            cfg.retrieval.target_tokens = r.value("target_tokens", 512);
            cfg.retrieval.overlap_tokens = r.value("overlap_tokens", 64);
            cfg.retrieval.store_path = resolve(base, r.value("store", std::string()));
        }

        if (j.contains("temperatures")) {
            cfg.specialist_temperature = j.at("temperatures").value("specialist", 0.2);
            cfg.coordinator_temperature = j.at("temperatures").value("coordinator", 0.0);
        }
        cfg.retry_limit = j.value("retry_limit", 1);
        if (j.contains("phase2_order"))
            cfg.phase2_order = j.at("phase2_order").get<std::vector<std::string>>();
        cfg.output_dir = j.value("output_dir", std::string("out"));
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw FileParseError(path + ": " + e.what());
    }

    if (cfg.backend.mode == BackendSection::Mode::Mock && cfg.backend.transcript_path.empty())
        throw ConfigError(path + ": mock mode requires backend.transcript");
    if (cfg.backend.mode == BackendSection::Mode::Live && cfg.backend.endpoint.empty())
        throw ConfigError(path + ": live mode requires backend.endpoint");
    if (cfg.backend.embedding_dimension <= 0)
        throw ConfigError(path + ": embedding_dimension must be positive");
    if (cfg.retrieval.enabled && cfg.retrieval.target_tokens <= cfg.retrieval.overlap_tokens)
        throw ConfigError(path + ": retrieval.target_tokens must exceed overlap_tokens");
    return cfg;
}

std::unique_ptr<Backend> make_backend(const MainConfig& config) {
    if (config.backend.mode == BackendSection::Mode::Mock) {
        return std::make_unique<MockBackend>(MockBackend::load_file(
            config.backend.transcript_path, config.backend.embedding_dimension));
    }
    HttpBackendOptions options;
    options.base_url = config.backend.endpoint;
    options.embedding_model_id = config.backend.embedding_model_id;
    if (const char* key = std::getenv(config.backend.api_key_env.c_str())) options.api_key = key;
    return std::make_unique<HttpBackend>(std::move(options));
}

} // namespace stonediag
