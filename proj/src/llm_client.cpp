#include "greenprompt/llm_client.hpp"

#include <httplib.h>

#include <chrono>
#include <iostream>
#include <thread>

namespace greenprompt {

using nlohmann::json;

nlohmann::json to_request_json(const ChatPrompt& prompt, const EndpointConfig& cfg) {
    json messages = json::array();
    for (const auto& m : prompt.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return json{{"model", cfg.model_name},
                {"messages", std::move(messages)},
                {"temperature", cfg.temperature},
                {"max_tokens", cfg.max_output_tokens},
                {"stream", false}};
}

CompletionResult parse_completion(const nlohmann::json& body) {
    auto choices = body.find("choices");
    if (choices == body.end() || !choices->is_array() || choices->empty()) {
        throw MalformedResponse("response carries no choices");
    }
    const json& first = (*choices)[0];
    auto message = first.find("message");
    if (message == first.end() || !message->contains("content") ||
        !(*message)["content"].is_string()) {
        throw MalformedResponse("first choice has no message content");
    }

    CompletionResult result;
    result.text = (*message)["content"].get<std::string>();
    if (auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
        const auto read_count = [&](const char* key) -> std::optional<std::size_t> {
            auto it = usage->find(key);
            if (it == usage->end() || !it->is_number_integer()) return std::nullopt;
            const auto value = it->get<long long>();
            if (value < 0) return std::nullopt;
            return static_cast<std::size_t>(value);
        };
        result.prompt_tokens = read_count("prompt_tokens");
        result.completion_tokens = read_count("completion_tokens");
    }
    return result;
}

namespace {

/// Splits "scheme://host[:port][/prefix]" into the client target and the
/// path prefix requests get appended to.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("endpoint URL must be absolute: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

httplib::Headers auth_headers(const EndpointConfig& cfg) {
    httplib::Headers headers;
    if (cfg.api_key && !cfg.api_key->empty()) {
        headers.emplace("Authorization", "Bearer " + *cfg.api_key);
    }
    return headers;
}

void apply_timeouts(httplib::Client& cli, const EndpointConfig& cfg) {
    const auto usec = static_cast<time_t>(cfg.request_timeout_s * 1e6);
    cli.set_connection_timeout(0, std::min<time_t>(usec, 10'000'000));
    cli.set_read_timeout(usec / 1'000'000, usec % 1'000'000);
    cli.set_write_timeout(usec / 1'000'000, usec % 1'000'000);
}

} // namespace

LlmClient::LlmClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    std::tie(host_part_, path_prefix_) = split_base_url(cfg_.base_url);
    if (cfg_.max_output_tokens < 1) {
        throw std::invalid_argument("max_output_tokens must be at least 1");
    }
}

CompletionResult LlmClient::complete(const ChatPrompt& prompt) const {
    const std::string body = to_request_json(prompt, cfg_).dump();
    const std::string path = path_prefix_ + "/v1/chat/completions";

    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        httplib::Client cli(host_part_);
        apply_timeouts(cli, cfg_);

        const auto t0 = std::chrono::steady_clock::now();
        auto res = cli.Post(path, auth_headers(cfg_), body, "application/json");
        const auto t1 = std::chrono::steady_clock::now();

        if (!res) {
            last_error = httplib::to_string(res.error());
            if (attempt < max_attempts) {
                const auto backoff = std::chrono::milliseconds(250) * (1 << (attempt - 1));
                std::cerr << "completion attempt " << attempt << "/" << max_attempts
                          << " failed (" << last_error << "), retrying in " << backoff.count()
                          << " ms\n";
                std::this_thread::sleep_for(backoff);
            }
            continue;
        }
        if (res->status != 200) {
            throw EndpointHttpError("endpoint returned HTTP " + std::to_string(res->status) +
                                    ": " + res->body.substr(0, 200));
        }

        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            throw MalformedResponse("response body is not JSON");
        }
        CompletionResult result = parse_completion(parsed);
        result.latency_s = std::chrono::duration<double>(t1 - t0).count();
        return result;
    }
    throw EndpointUnreachable("endpoint unreachable after " + std::to_string(max_attempts) +
                              " attempts: " + last_error);
}

nlohmann::json LlmClient::health_check() const {
    httplib::Client cli(host_part_);
    apply_timeouts(cli, cfg_);

    auto res = cli.Get(path_prefix_ + "/v1/models", auth_headers(cfg_));
    if (!res) {
        throw EndpointUnreachable("endpoint unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw EndpointHttpError("model listing returned HTTP " + std::to_string(res->status));
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array()) {
        throw MalformedResponse("model listing body is not the expected format");
    }
    for (const auto& model : parsed["data"]) {
        if (model.contains("id") && model["id"] == cfg_.model_name) {
            return model;
        }
    }
    throw ModelNotFound("endpoint does not serve model '" + cfg_.model_name + "'");
}

} // namespace greenprompt
