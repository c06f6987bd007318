#include "stonediag/errors.hpp"
#include "stonediag/gateway.hpp"

#include "httplib.h"
#include "json.hpp"

#include <chrono>
#include <thread>

namespace stonediag {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

} // namespace

std::string build_chat_body(const ChatRequest& request) {
    validate_request(request);
    ordered_json body;
    body["model"] = request.model_id;
    body["messages"] = ordered_json::array();
    for (const Message& m : request.messages) {
        ordered_json msg;
        msg["role"] = role_name(m.role);
        ordered_json content = ordered_json::array();
        for (const MessagePart& p : m.parts) {
            if (const auto* text = std::get_if<TextPart>(&p)) {
                content.push_back({{"type", "text"}, {"text", text->text}});
            } else {
                const auto& img = std::get<ImagePart>(p);
                ordered_json part;
                part["type"] = "image_url";
                part["image_url"] = {
                    {"url", "data:" + img.media_type + ";base64," + img.base64_data}};
                content.push_back(std::move(part));
            }
        }
        msg["content"] = std::move(content);
        body["messages"].push_back(std::move(msg));
    }
    body["temperature"] = request.temperature;
    if (request.effort) body["reasoning_effort"] = effort_name(*request.effort);
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
    return body.dump();
}

ChatResponse parse_chat_response(const std::string& body) {
    ordered_json j;
    try {
        j = ordered_json::parse(body);
    } catch (const std::exception& e) {
        throw WireProtocolError(std::string("chat response is not JSON: ") + e.what());
    }
    try {
        ChatResponse r;
        const auto& choice = j.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        r.text = content.is_null() ? "" : content.get<std::string>();
        const std::string reason =
            choice.value("finish_reason", std::string("stop"));
        if (reason == "stop") {
            r.finish_reason = FinishReason::Stop;
        } else if (reason == "length") {
            r.finish_reason = FinishReason::Length;
        } else {
            r.finish_reason = FinishReason::Error;
        }
        if (j.contains("usage") && !j.at("usage").is_null()) {
            r.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0LL);
            r.usage.completion_tokens = j.at("usage").value("completion_tokens", 0LL);
        }
        return r;
    } catch (const std::exception& e) {
        throw WireProtocolError(std::string("chat response shape unexpected: ") + e.what());
    }
}

std::string build_embedding_body(const std::string& model_id, const std::string& text) {
    ordered_json body;
    body["model"] = model_id;
    body["input"] = text;
    return body.dump();
}

std::vector<double> parse_embedding_response(const std::string& body) {
    try {
        const ordered_json j = ordered_json::parse(body);
        return j.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const std::exception& e) {
        throw WireProtocolError(std::string("embedding response shape unexpected: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

struct HttpBackend::Impl {
    HttpBackendOptions options;
    httplib::Client client;

    explicit Impl(HttpBackendOptions opts)
        : options(std::move(opts)), client(options.base_url) {
        client.set_connection_timeout(options.timeout_seconds);
        client.set_read_timeout(options.timeout_seconds);
        client.set_write_timeout(options.timeout_seconds);
    }

    std::string post_json(const std::string& path, const std::string& body) {
        httplib::Headers headers;
        if (!options.api_key.empty())
            headers.emplace("Authorization", "Bearer " + options.api_key);
        std::string last_error;
        int backoff_ms = options.initial_backoff_ms;
        for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
            auto result = client.Post(path, headers, body, "application/json");
            if (result) {
                if (result->status >= 200 && result->status < 300) return result->body;
                std::string excerpt = result->body.substr(0, 512);
                throw WireProtocolError("POST " + path + " returned status " +
                                        std::to_string(result->status) + ": " + excerpt);
            }
            last_error = httplib::to_string(result.error());
            if (attempt < options.max_attempts) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
        }
        throw NetworkError("POST " + path + " failed after " +
                           std::to_string(options.max_attempts) + " attempts: " + last_error);
    }
};

HttpBackend::HttpBackend(HttpBackendOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {
    if (impl_->options.base_url.empty())
        throw ConfigError("http backend: base_url must be set");
}

HttpBackend::~HttpBackend() = default;

ChatResponse HttpBackend::complete(const CallContext&, const ChatRequest& request) {
    const std::string body = impl_->post_json("/v1/chat/completions", build_chat_body(request));
    return parse_chat_response(body);
}

std::vector<double> HttpBackend::embed_text(const std::string& text) {
    const std::string body = impl_->post_json(
        "/v1/embeddings", build_embedding_body(impl_->options.embedding_model_id, text));
    return parse_embedding_response(body);
}

} // namespace stonediag
