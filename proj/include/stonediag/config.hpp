#pragma once

#include "stonediag/gateway.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stonediag {

// Environment variable holding the live-backend credential. Secrets live in
// the environment only, never in config files.
extern const char* const kDefaultApiKeyEnv;

struct BackendSection {
    enum class Mode { Live, Mock };
    Mode mode = Mode::Mock;
    std::string endpoint;           // live mode: base URL
    std::string model_id;
    std::string embedding_model_id;
    int embedding_dimension = 64;   // mock embeddings
    std::optional<Effort> effort;
    std::string transcript_path;    // mock mode, resolved
    PriceTable prices;
    std::string api_key_env = "STONEDIAG_API_KEY";
};

struct RetrievalSection {
    bool enabled = true;
    int k = 8;
    int target_tokens = 512;
    int overlap_tokens = 64;
    std::string store_path; // resolved; may be empty when retrieval is disabled
};

struct MainConfig {
    BackendSection backend;
    std::string taxonomy_path;
    std::string roster_path;
    RetrievalSection retrieval;
    double specialist_temperature = 0.2;
    double coordinator_temperature = 0.0;
    int retry_limit = 1;
    std::vector<std::string> phase2_order;
    std::string output_dir = "out";
};

// Loads and validates the main config. Relative paths inside the file are
// resolved against the config file's directory. Mock mode requires a
// transcript path; live mode requires an endpoint.
MainConfig load_main_config(const std::string& path);

std::unique_ptr<Backend> make_backend(const MainConfig& config);

} // namespace stonediag
