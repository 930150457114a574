#pragma once

#include <httplib.h>
#include <json.hpp>

#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace testutil {

/// In-process OpenAI-compatible chat-completion stub. The responder decides
/// the assistant text from the parsed request body; tests can also force
/// HTTP-level failures or malformed bodies.
class MockEndpoint {
public:
    using Responder = std::function<std::string(const nlohmann::json& request)>;

    explicit MockEndpoint(std::string model = "llama3-8b-instruct")
        : model_(std::move(model)) {
        responder_ = [](const nlohmann::json&) { return std::string("return 0;"); };

        server_.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json body{{"object", "list"},
                                {"data", {{{"id", model_}, {"object", "model"}}}}};
            res.set_content(body.dump(), "application/json");
        });

        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         nlohmann::json request = nlohmann::json::parse(req.body);
                         std::lock_guard<std::mutex> lock(mutex_);
                         requests_.push_back(request);
                         auth_headers_.push_back(req.get_header_value("Authorization"));
                         if (fail_indices_.count(requests_.size() - 1)) {
                             res.status = fail_indices_status_;
                             res.set_content("{\"error\": \"forced\"}", "application/json");
                             return;
                         }
                         if (status_override_) {
                             res.status = status_override_;
                             res.set_content(status_body_, "application/json");
                             return;
                         }
                         if (malformed_) {
                             res.set_content("{\"choices\": []}", "application/json");
                             return;
                         }
                         nlohmann::json body{
                             {"id", "cmpl-mock"},
                             {"object", "chat.completion"},
                             {"choices",
                              {{{"index", 0},
                                {"message",
                                 {{"role", "assistant"}, {"content", responder_(request)}}},
                                {"finish_reason", "stop"}}}},
                             {"usage",
                              {{"prompt_tokens", 12}, {"completion_tokens", 5}}}};
                         res.set_content(body.dump(), "application/json");
                     });

        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockEndpoint() { stop(); }

    MockEndpoint(const MockEndpoint&) = delete;
    MockEndpoint& operator=(const MockEndpoint&) = delete;

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }
    const std::string& model() const { return model_; }

    void set_responder(Responder responder) {
        std::lock_guard<std::mutex> lock(mutex_);
        responder_ = std::move(responder);
    }

    /// Makes every subsequent completion call answer with this HTTP status.
    void force_status(int status, std::string body = "{\"error\": \"forced\"}") {
        std::lock_guard<std::mutex> lock(mutex_);
        status_override_ = status;
        status_body_ = std::move(body);
    }

    /// Makes every subsequent completion call return a body with no choices.
    void force_malformed(bool on = true) {
        std::lock_guard<std::mutex> lock(mutex_);
        malformed_ = on;
    }

    /// Fails exactly the completion calls arriving at these 0-based indices.
    void fail_request_indices(std::set<std::size_t> indices, int status = 500) {
        std::lock_guard<std::mutex> lock(mutex_);
        fail_indices_ = std::move(indices);
        fail_indices_status_ = status;
    }

    std::size_t request_count() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_.size();
    }

    std::vector<nlohmann::json> requests() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_;
    }

    std::vector<std::string> auth_headers() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return auth_headers_;
    }

private:
    std::string model_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;

    mutable std::mutex mutex_;
    Responder responder_;
    int status_override_ = 0;
    std::string status_body_;
    bool malformed_ = false;
    std::set<std::size_t> fail_indices_;
    int fail_indices_status_ = 500;
    std::vector<nlohmann::json> requests_;
    std::vector<std::string> auth_headers_;
};

} // namespace testutil
