#pragma once

#include "stonediag/decimal.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace stonediag {

enum class Role { System, User, Assistant };

struct TextPart {
    std::string text;
};

struct ImagePart {
    std::string media_type; // image/jpeg or image/png
    std::string base64_data;
};

using MessagePart = std::variant<TextPart, ImagePart>;

struct Message {
    Role role = Role::User;
    std::vector<MessagePart> parts; // non-empty
};

enum class Effort { Low, Medium, High };

std::string effort_name(Effort e);

// Identifies a call for transcript lookup and usage accounting.
struct CallContext {
    std::string case_id;
    std::string agent_id;
    std::string phase; // individual | discussion | consensus | baseline
};

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    std::optional<Effort> effort; // passed through as an opaque field
    std::optional<int> max_output_tokens;
};

enum class FinishReason { Stop, Length, Error };

struct Usage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;

    bool operator==(const Usage&) const = default;
};

struct ChatResponse {
    std::string text;
    Usage usage;
    FinishReason finish_reason = FinishReason::Stop;
};

// Model-backend abstraction. Implementations must tolerate concurrent
// complete() calls; the individual phase runs agents in parallel.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const CallContext& ctx, const ChatRequest& request) = 0;
    virtual std::vector<double> embed_text(const std::string& text) = 0;
    // True when replies are scripted and timestamps should be zeroed.
    virtual bool deterministic() const { return false; }
};

// ---------------------------------------------------------------------------
// Usage ledger

struct LedgerEntry {
    std::string case_id;
    std::string agent_id;
    std::string phase;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

struct LedgerTotals {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    Money cost;
};

class UsageLedger {
public:
    explicit UsageLedger(PriceTable prices = {}) : prices_(prices) {}

    void append(LedgerEntry entry);
    std::vector<LedgerEntry> entries() const;
    LedgerTotals totals() const;
    LedgerTotals totals_for_case(const std::string& case_id) const;
    const PriceTable& prices() const { return prices_; }

private:
    mutable std::mutex mutex_;
    PriceTable prices_;
    std::vector<LedgerEntry> entries_;
};

// ---------------------------------------------------------------------------
// Gateway: validates requests, dispatches to the backend, records usage,
// and L2-normalizes every embedding regardless of what the backend returned.

class Gateway {
public:
    Gateway(Backend& backend, UsageLedger& ledger) : backend_(backend), ledger_(ledger) {}

    ChatResponse complete(const CallContext& ctx, const ChatRequest& request);
    std::vector<double> embed_text(const std::string& text);
    bool deterministic() const { return backend_.deterministic(); }
    UsageLedger& ledger() { return ledger_; }

private:
    Backend& backend_;
    UsageLedger& ledger_;
};

// ---------------------------------------------------------------------------
// Scripted backend. Replies come from a transcript keyed by
// (case_id, agent_id, phase); embeddings are derived from a seeded hash of
// the text, so retrieval runs offline and bit-identically on every platform:
//   state = fnv1a64(text); then dimension splitmix64 draws, each mapped to
//   [-1, 1) via (x >> 11) / 2^52 - 1, followed by L2 normalization.

struct TranscriptEntry {
    std::string reply;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

class MockBackend : public Backend {
public:
    using Key = std::tuple<std::string, std::string, std::string>;

    MockBackend(int embedding_dimension, std::map<Key, TranscriptEntry> transcript);

    static MockBackend load(std::istream& in, const std::string& origin,
                            int embedding_dimension);
    static MockBackend load_file(const std::string& path, int embedding_dimension);

    ChatResponse complete(const CallContext& ctx, const ChatRequest& request) override;
    std::vector<double> embed_text(const std::string& text) override;
    bool deterministic() const override { return true; }

    static std::vector<double> pseudo_embedding(const std::string& text, int dimension);

private:
    int dimension_;
    std::map<Key, TranscriptEntry> transcript_;
};

// ---------------------------------------------------------------------------
// Live backend over the OpenAI-compatible chat-completions wire protocol.
// Declared here, implemented in gateway_http.cpp; the JSON builders are free
// functions so the wire format stays testable without a server.

struct HttpBackendOptions {
    std::string base_url;           // e.g. https://api.openai.com
    std::string api_key;            // from the environment, never from files
    std::string embedding_model_id; // used by embed_text
    int max_attempts = 3;           // transport retries, exponential backoff
    int initial_backoff_ms = 250;
    int timeout_seconds = 120;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendOptions options);
    ~HttpBackend() override;

    ChatResponse complete(const CallContext& ctx, const ChatRequest& request) override;
    std::vector<double> embed_text(const std::string& text) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string build_chat_body(const ChatRequest& request);
ChatResponse parse_chat_response(const std::string& body);
std::string build_embedding_body(const std::string& model_id, const std::string& text);
std::vector<double> parse_embedding_response(const std::string& body);

void validate_request(const ChatRequest& request);
std::vector<double> l2_normalized(std::vector<double> v);

} // namespace stonediag
