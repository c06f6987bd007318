#include "stonediag/gateway.hpp"

#include "stonediag/errors.hpp"
#include "stonediag/text.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

std::string effort_name(Effort e) {
    switch (e) {
        case Effort::Low: return "low";
        case Effort::Medium: return "medium";
        case Effort::High: return "high";
    }
    return "medium";
}

void validate_request(const ChatRequest& request) {
    if (request.messages.empty()) throw MisuseError("chat request: messages must be non-empty");
    if (request.temperature < 0.0) throw MisuseError("chat request: temperature must be >= 0");
    int images = 0;
    for (const Message& m : request.messages) {
        if (m.parts.empty()) throw MisuseError("chat request: message parts must be non-empty");
        for (const MessagePart& p : m.parts) {
            if (const auto* img = std::get_if<ImagePart>(&p)) {
                ++images;
                if (img->media_type != "image/jpeg" && img->media_type != "image/png")
                    throw MisuseError("chat request: unsupported media type " + img->media_type);
            }
        }
    }
    if (images > 1) throw MisuseError("chat request: at most one image part per request");
}

std::vector<double> l2_normalized(std::vector<double> v) {
    double sq = 0.0;
    for (double d : v) sq += d * d;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) throw VectorError("embedding: backend returned a zero vector");
    for (double& d : v) d /= norm;
    return v;
}

// ---------------------------------------------------------------------------
// Ledger

void UsageLedger::append(LedgerEntry entry) {
    if (entry.prompt_tokens < 0 || entry.completion_tokens < 0)
        throw MisuseError("ledger: token counts must be >= 0");
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back(std::move(entry));
}

std::vector<LedgerEntry> UsageLedger::entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_;
}

LedgerTotals UsageLedger::totals() const {
    std::lock_guard<std::mutex> lock(mutex_);
    LedgerTotals t;
    for (const LedgerEntry& e : entries_) {
        t.prompt_tokens += e.prompt_tokens;
        t.completion_tokens += e.completion_tokens;
    }
    t.cost = cost_of(prices_, t.prompt_tokens, t.completion_tokens);
    return t;
}

LedgerTotals UsageLedger::totals_for_case(const std::string& case_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    LedgerTotals t;
    for (const LedgerEntry& e : entries_) {
        if (e.case_id != case_id) continue;
        t.prompt_tokens += e.prompt_tokens;
        t.completion_tokens += e.completion_tokens;
    }
    t.cost = cost_of(prices_, t.prompt_tokens, t.completion_tokens);
    return t;
}

// ---------------------------------------------------------------------------
// Gateway

ChatResponse Gateway::complete(const CallContext& ctx, const ChatRequest& request) {
    validate_request(request);
    ChatResponse response = backend_.complete(ctx, request);
    if (response.usage.prompt_tokens < 0 || response.usage.completion_tokens < 0)
        throw WireProtocolError("backend reported negative token usage");
    ledger_.append({ctx.case_id, ctx.agent_id, ctx.phase, response.usage.prompt_tokens,
                    response.usage.completion_tokens});
    return response;
}

std::vector<double> Gateway::embed_text(const std::string& text) {
    if (text.empty()) throw MisuseError("embed_text: text must be non-empty");
    return l2_normalized(backend_.embed_text(text));
}

// ---------------------------------------------------------------------------
// Mock backend

MockBackend::MockBackend(int embedding_dimension, std::map<Key, TranscriptEntry> transcript)
    : dimension_(embedding_dimension), transcript_(std::move(transcript)) {
    if (dimension_ <= 0) throw ConfigError("mock backend: embedding dimension must be positive");
}

MockBackend MockBackend::load(std::istream& in, const std::string& origin,
                              int embedding_dimension) {
    std::map<Key, TranscriptEntry> transcript;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const ordered_json j = ordered_json::parse(line);
            Key key{j.at("case_id").get<std::string>(), j.at("agent_id").get<std::string>(),
                    j.at("phase").get<std::string>()};
            TranscriptEntry entry;
            entry.reply = j.at("reply").get<std::string>();
            entry.prompt_tokens = j.at("prompt_tokens").get<long long>();
            entry.completion_tokens = j.at("completion_tokens").get<long long>();
            if (!transcript.emplace(std::move(key), std::move(entry)).second)
                throw std::runtime_error("duplicate transcript key");
        } catch (const std::exception& e) {
            throw FileParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return MockBackend(embedding_dimension, std::move(transcript));
}

MockBackend MockBackend::load_file(const std::string& path, int embedding_dimension) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("transcript: cannot open " + path);
    return load(in, path, embedding_dimension);
}

ChatResponse MockBackend::complete(const CallContext& ctx, const ChatRequest&) {
    const Key key{ctx.case_id, ctx.agent_id, ctx.phase};
    auto it = transcript_.find(key);
    if (it == transcript_.end())
        throw FixtureError("mock transcript has no entry for (" + ctx.case_id + ", " +
                           ctx.agent_id + ", " + ctx.phase + ")");
    ChatResponse r;
    r.text = it->second.reply;
    r.usage.prompt_tokens = it->second.prompt_tokens;
    r.usage.completion_tokens = it->second.completion_tokens;
    r.finish_reason = FinishReason::Stop;
    return r;
}

std::vector<double> MockBackend::pseudo_embedding(const std::string& text, int dimension) {
    std::uint64_t state = fnv1a64(text);
    std::vector<double> v(static_cast<std::size_t>(dimension));
    for (double& d : v) {
        const std::uint64_t x = splitmix64(state);
        d = static_cast<double>(x >> 11) / 4503599627370496.0 - 1.0; // [-1, 1)
    }
    double sq = 0.0;
    for (double d : v) sq += d * d;
    if (sq < 1e-24) v[0] = 1.0; // unreachable in practice, keeps the norm positive
    return l2_normalized(std::move(v));
}

std::vector<double> MockBackend::embed_text(const std::string& text) {
    return pseudo_embedding(text, dimension_);
}

} // namespace stonediag
