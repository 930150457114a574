#pragma once

#include "greenprompt/prompt_engine.hpp"

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace greenprompt {

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string model_name = "llama3-8b-instruct";
    double temperature = 0.0;
    int max_output_tokens = 128;
    double request_timeout_s = 120.0;
    std::optional<std::string> api_key;
};

struct CompletionResult {
    std::string text;
    std::optional<std::size_t> prompt_tokens;
    std::optional<std::size_t> completion_tokens;
    double latency_s = 0.0;
};

/// Endpoint unreachable after all retry attempts.
struct EndpointUnreachable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Endpoint answered with a non-success HTTP status.
struct EndpointHttpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Response body did not carry a usable completion.
struct MalformedResponse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Request body for POST {base_url}/v1/chat/completions. Message order and
/// roles map one-to-one from the prompt.
nlohmann::json to_request_json(const ChatPrompt& prompt, const EndpointConfig& cfg);

/// Extracts the first choice's message content plus token usage. Throws
/// MalformedResponse when no choice or content is present.
CompletionResult parse_completion(const nlohmann::json& body);

/// Client for an OpenAI-compatible chat-completion endpoint. Stateless and
/// reusable; the experiment runner keeps at most one request in flight so
/// energy attribution stays exclusive.
class LlmClient {
public:
    explicit LlmClient(EndpointConfig cfg);

    /// Sends the prompt, returning the raw completion text and end-to-end
    /// latency. Connection-level failures retry up to max_attempts with
    /// backoff (each retry logged to stderr); HTTP errors and malformed
    /// bodies fail immediately.
    CompletionResult complete(const ChatPrompt& prompt) const;

    /// Confirms the endpoint is up and serves the configured model, via
    /// GET /v1/models. Returns the matching model descriptor.
    nlohmann::json health_check() const;

    const EndpointConfig& config() const { return cfg_; }

    static constexpr int max_attempts = 3;

private:
    EndpointConfig cfg_;
    std::string host_part_;   // scheme://host[:port]
    std::string path_prefix_; // optional path under the base URL
};

} // namespace greenprompt
