#include "forge/client.hpp"

#include "forge/error.hpp"

#include <algorithm>

namespace forge {

void SamplingParams::validate() const {
    if (temperature < 0.0) {
        raise(Errc::Config, "sampling.temperature must be >= 0");
    }
    if (top_p <= 0.0 || top_p > 1.0) {
        raise(Errc::Config, "sampling.top_p must be in (0, 1]");
    }
    if (max_tokens <= 0) {
        raise(Errc::Config, "sampling.max_tokens must be positive");
    }
}

SamplingParams default_elicit_params(const ChatTemplate& tmpl) {
    SamplingParams params;
    params.temperature = 1.0;
    params.top_p = 1.0;
    params.max_tokens = 1024;
    params.stop = tmpl.stop_strings;
    if (std::find(params.stop.begin(), params.stop.end(), tmpl.pre_response) == params.stop.end()) {
        params.stop.push_back(tmpl.pre_response);
    }
    return params;
}

SamplingParams default_respond_params(const ChatTemplate& tmpl) {
    SamplingParams params;
    params.temperature = 0.7;
    params.top_p = 0.9;
    params.max_tokens = 2048;
    params.stop = tmpl.stop_strings;
    return params;
}

const char* finish_reason_name(FinishReason reason) {
    switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
    }
    return "unknown";
}

std::vector<std::chrono::milliseconds> backoff_schedule(const BackoffPolicy& policy, Rng& rng) {
    std::vector<std::chrono::milliseconds> delays;
    delays.reserve(static_cast<std::size_t>(std::max(policy.retry_limit, 0)));
    std::int64_t base = policy.initial.count();
    std::int64_t prev = 0;
    for (int attempt = 0; attempt < policy.retry_limit; ++attempt) {
        std::int64_t jitter = 0;
        if (policy.initial.count() > 0) {
            jitter = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(policy.initial.count()) + 1));
        }
        std::int64_t delay = std::min<std::int64_t>(base, policy.max.count()) + jitter;
        delay = std::max(delay, prev); // never decrease
        delays.emplace_back(delay);
        prev = delay;
        if (base < policy.max.count()) {
            base *= 2;
        }
    }
    return delays;
}

void ClientConfig::validate() const {
    if (max_in_flight < 1) {
        raise(Errc::Config, "client.max_in_flight must be >= 1");
    }
    if (backoff.retry_limit < 0) {
        raise(Errc::Config, "client.retry_limit must be >= 0");
    }
    // Chat endpoints re-wrap the prompt in a message envelope, which breaks
    // raw document+template elicitation.
    if (completions_path.find("/chat/") != std::string::npos) {
        raise(Errc::Config,
              "client.completions_path points at a chat endpoint; a raw completions endpoint is required");
    }
}

} // namespace forge
