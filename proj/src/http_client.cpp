#include "forge/http_client.hpp"

#include "forge/error.hpp"
#include "forge/text.hpp"

#include <httplib.h>

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace forge {

std::string resolve_api_key(const std::string& configured) {
    if (!configured.empty()) {
        return configured;
    }
    const char* env = std::getenv("FORGE_API_KEY");
    return env ? env : "";
}

struct HttpClient::Impl {
    ClientConfig config;
    std::mutex mutex;
    std::condition_variable slot_available;
    int in_flight = 0;

    explicit Impl(ClientConfig cfg) : config(std::move(cfg)) {}

    struct Slot {
        Impl* impl;
        explicit Slot(Impl* i) : impl(i) {
            std::unique_lock<std::mutex> lock(impl->mutex);
            impl->slot_available.wait(lock, [&] { return impl->in_flight < impl->config.max_in_flight; });
            ++impl->in_flight;
        }
        ~Slot() {
            {
                std::lock_guard<std::mutex> lock(impl->mutex);
                --impl->in_flight;
            }
            impl->slot_available.notify_one();
        }
    };

    httplib::Client make_connection() const {
        httplib::Client conn(config.endpoint);
        auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
        conn.set_connection_timeout(std::max<long>(1, seconds.count()));
        conn.set_read_timeout(std::max<long>(1, seconds.count()));
        conn.set_write_timeout(std::max<long>(1, seconds.count()));
        if (!config.api_key.empty()) {
            conn.set_default_headers({{"Authorization", "Bearer " + config.api_key}});
        }
        return conn;
    }

    static bool retryable_status(int status) {
        return status == 429 || (status >= 500 && status < 600);
    }

    // POST with retries; returns the parsed body of the first 2xx reply.
    Json post_json(const std::string& path, const Json& body) {
        Slot slot(this);
        Rng backoff_rng(fnv1a64(body.dump()));
        auto delays = backoff_schedule(config.backoff, backoff_rng);
        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= config.backoff.retry_limit; ++attempt) {
            if (attempt > 0) {
                auto delay = delays[static_cast<std::size_t>(attempt - 1)];
                if (delay.count() > 0) {
                    std::this_thread::sleep_for(delay);
                }
            }
            auto conn = make_connection();
            auto res = conn.Post(path, body.dump(), "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 200 && res->status < 300) {
                try {
                    return Json::parse(res->body);
                } catch (const nlohmann::json::exception& e) {
                    raise(Errc::Transport, std::string("backend returned unparseable body: ") + e.what());
                }
            }
            if (retryable_status(res->status)) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            raise(Errc::BackendRejected,
                  "status " + std::to_string(res->status) + ": " + res->body.substr(0, 512));
        }
        raise(Errc::Transport, "retries exhausted (" + std::to_string(config.backoff.retry_limit) +
                                   " retries): " + last_error);
    }
};

HttpClient::HttpClient(ClientConfig config) : impl_(nullptr) {
    config.api_key = resolve_api_key(config.api_key);
    config.validate();
    if (config.endpoint.empty()) {
        raise(Errc::Config, "client.endpoint is required for the http backend");
    }
    impl_ = std::make_unique<Impl>(std::move(config));
}

HttpClient::~HttpClient() = default;

std::string HttpClient::backend_name() const { return "http:" + impl_->config.endpoint; }

CompletionResult HttpClient::complete(const RenderedPrompt& prompt, const SamplingParams& params) {
    params.validate();
    Json body;
    if (!impl_->config.model.empty()) {
        body["model"] = impl_->config.model;
    }
    body["prompt"] = prompt.text;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["max_tokens"] = params.max_tokens;
    if (!params.stop.empty()) {
        body["stop"] = params.stop;
    }
    if (params.seed) {
        body["seed"] = *params.seed;
    }

    Json reply = impl_->post_json(impl_->config.completions_path, body);

    CompletionResult result;
    try {
        const Json& choice = reply.at("choices").at(0);
        result.text = choice.at("text").get<std::string>();
        std::string reason = choice.value("finish_reason", "stop");
        if (reason == "stop") {
            result.finish_reason = FinishReason::Stop;
        } else if (reason == "length") {
            result.finish_reason = FinishReason::Length;
        } else {
            result.finish_reason = FinishReason::Error;
        }
        if (reply.contains("usage")) {
            result.prompt_tokens = reply["usage"].value("prompt_tokens", std::size_t{0});
            result.completion_tokens = reply["usage"].value("completion_tokens", std::size_t{0});
        }
        result.request_id = reply.value("id", std::string());
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::Transport, std::string("unexpected completion reply shape: ") + e.what());
    }

    // Backends are expected to exclude the stop marker; truncate defensively
    // in case one includes it.
    std::size_t stop_pos = find_first_of_any(result.text, params.stop);
    if (stop_pos != std::string::npos) {
        result.text = result.text.substr(0, stop_pos);
        result.finish_reason = FinishReason::Stop;
    }
    return result;
}

std::vector<std::vector<double>> HttpClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        raise(Errc::Config, "embed requires a non-empty batch");
    }
    Json body;
    if (!impl_->config.model.empty()) {
        body["model"] = impl_->config.model;
    }
    body["input"] = texts;

    Json reply = impl_->post_json(impl_->config.embeddings_path, body);

    std::vector<std::vector<double>> out;
    try {
        const Json& data = reply.at("data");
        out.reserve(data.size());
        for (const auto& item : data) {
            out.push_back(item.at("embedding").get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::Transport, std::string("unexpected embedding reply shape: ") + e.what());
    }
    if (out.size() != texts.size()) {
        raise(Errc::DimensionMismatch, "backend returned " + std::to_string(out.size()) +
                                           " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    for (const auto& v : out) {
        if (v.size() != out.front().size()) {
            raise(Errc::DimensionMismatch, "backend returned ragged embedding vectors");
        }
    }
    return out;
}

} // namespace forge
