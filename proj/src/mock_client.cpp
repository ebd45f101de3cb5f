#include "forge/mock_client.hpp"

#include "forge/error.hpp"
#include "forge/text.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <thread>

namespace forge {

namespace {

std::string hex16(std::uint64_t value) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << value;
    return out.str();
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current += static_cast<char>(c);
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

std::string take_words(std::string_view text, std::size_t n) {
    auto words = split_words(text);
    if (words.size() > n) {
        words.resize(n);
    }
    return join(words, " ");
}

// Pick a plain word from the tail of the prompt, skipping special-token
// markup, so hash-rule completions look vaguely on-topic.
std::string pick_topic_word(const std::string& prompt, Rng& rng) {
    auto words = split_words(prompt);
    std::vector<std::string> candidates;
    std::size_t start = words.size() > 64 ? words.size() - 64 : 0;
    for (std::size_t i = start; i < words.size(); ++i) {
        const std::string& w = words[i];
        if (w.size() >= 3 && w.find('<') == std::string::npos && w.find('|') == std::string::npos) {
            candidates.push_back(w);
        }
    }
    if (candidates.empty()) {
        return "this text";
    }
    return candidates[uniform_below(rng, candidates.size())];
}

} // namespace

MockConfig MockConfig::from_json(const Json& value) {
    MockConfig config;
    try {
        if (value.contains("completions")) {
            for (const auto& [key, text] : value["completions"].items()) {
                config.completions[key] = text.get<std::string>();
            }
        }
        if (value.contains("contains_rules")) {
            for (const auto& rule : value["contains_rules"]) {
                config.contains_rules.emplace_back(rule.at("contains").get<std::string>(),
                                                   rule.at("text").get<std::string>());
            }
        }
        if (value.contains("reject_prompts")) {
            for (const auto& p : value["reject_prompts"]) {
                config.reject_prompts.insert(p.get<std::string>());
            }
        }
        if (value.contains("fail_prompts")) {
            for (const auto& [key, n] : value["fail_prompts"].items()) {
                config.fail_prompts[key] = n.get<int>();
            }
        }
        config.fail_first = value.value("fail_first", 0);
        config.hash_fallback = value.value("hash_fallback", true);
        config.embedding_dim = value.value("embedding_dim", std::size_t{64});
        config.latency_max_ms = value.value("latency_max_ms", 0);
        config.max_in_flight = value.value("max_in_flight", 8);
        config.backoff.retry_limit = value.value("retry_limit", 3);
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::Config, std::string("bad mock config: ") + e.what());
    }
    return config;
}

MockConfig MockConfig::from_file(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

MockClient::MockClient(MockConfig config) : config_(std::move(config)) {
    if (config_.max_in_flight < 1) {
        raise(Errc::Config, "mock max_in_flight must be >= 1");
    }
    if (config_.respond_markers.empty()) {
        for (const char* family : {"llama3", "qwen25"}) {
            config_.respond_markers.push_back(builtin_template(family).pre_response);
        }
    }
    fail_budget_ = config_.fail_first;
    prompt_fail_budget_ = config_.fail_prompts;
}

bool MockClient::should_fail_transiently(const std::string& prompt) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (fail_budget_ > 0) {
        --fail_budget_;
        return true;
    }
    auto it = prompt_fail_budget_.find(prompt);
    if (it != prompt_fail_budget_.end() && it->second > 0) {
        --it->second;
        return true;
    }
    return false;
}

std::string MockClient::resolve_completion(const std::string& prompt,
                                           const SamplingParams& params) const {
    auto exact = config_.completions.find(prompt);
    if (exact != config_.completions.end()) {
        return exact->second;
    }
    auto hashed = config_.completions.find("#" + hex16(fnv1a64(prompt)));
    if (hashed != config_.completions.end()) {
        return hashed->second;
    }
    for (const auto& [needle, text] : config_.contains_rules) {
        if (prompt.find(needle) != std::string::npos) {
            return text;
        }
    }
    if (!config_.hash_fallback) {
        raise(Errc::BackendRejected, "mock has no mapping for prompt and hash fallback is disabled");
    }
    Rng rng(fnv1a64(prompt) ^ splitmix64(params.seed.value_or(0)));
    std::string topic = pick_topic_word(prompt, rng);
    bool respond_position = false;
    for (const auto& marker : config_.respond_markers) {
        if (!marker.empty() && std::string_view(prompt).ends_with(marker)) {
            respond_position = true;
            break;
        }
    }
    if (respond_position) {
        return "The passage explains the role of " + topic + " and summarizes its main points.";
    }
    return "What does the text say about " + topic + "?";
}

CompletionResult MockClient::complete(const RenderedPrompt& prompt, const SamplingParams& params) {
    params.validate();
    {
        std::unique_lock<std::mutex> lock(mutex_);
        slot_available_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
        if (in_flight_ > config_.max_in_flight) {
            bound_violated_.store(true);
        }
        int seen = max_in_flight_seen_.load();
        while (in_flight_ > seen && !max_in_flight_seen_.compare_exchange_weak(seen, in_flight_)) {
        }
    }
    struct SlotRelease {
        MockClient* self;
        ~SlotRelease() {
            {
                std::lock_guard<std::mutex> lock(self->mutex_);
                --self->in_flight_;
            }
            self->slot_available_.notify_one();
        }
    } release{this};

    if (config_.latency_max_ms > 0) {
        Rng latency_rng(fnv1a64(prompt.text) ^ params.seed.value_or(0));
        auto ms = uniform_below(latency_rng, static_cast<std::uint64_t>(config_.latency_max_ms) + 1);
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    if (config_.reject_prompts.count(prompt.text)) {
        requests_.fetch_add(1);
        raise(Errc::BackendRejected, "mock configured to reject this prompt");
    }

    int attempts = 0;
    Rng backoff_rng(fnv1a64(prompt.text));
    auto delays = backoff_schedule(config_.backoff, backoff_rng);
    while (true) {
        requests_.fetch_add(1);
        if (!should_fail_transiently(prompt.text)) {
            break;
        }
        if (attempts >= config_.backoff.retry_limit) {
            raise(Errc::Transport, "mock transient failures exhausted retry budget");
        }
        if (static_cast<std::size_t>(attempts) < delays.size() && delays[attempts].count() > 0) {
            std::this_thread::sleep_for(delays[attempts]);
        }
        ++attempts;
        retries_.fetch_add(1);
    }

    std::string text = resolve_completion(prompt.text, params);

    CompletionResult result;
    result.request_id = "mock-" + hex16(fnv1a64(prompt.text) ^ splitmix64(params.seed.value_or(0) + 1));
    result.prompt_tokens = word_tokenizer().count(prompt.text);

    // stop strings win over max_tokens when they appear earlier
    std::size_t stop_pos = find_first_of_any(text, params.stop);
    if (stop_pos != std::string::npos) {
        text = text.substr(0, stop_pos);
    }
    result.finish_reason = FinishReason::Stop;
    std::size_t words = word_tokenizer().count(text);
    if (words > static_cast<std::size_t>(params.max_tokens)) {
        text = take_words(text, static_cast<std::size_t>(params.max_tokens));
        result.finish_reason = FinishReason::Length;
        words = static_cast<std::size_t>(params.max_tokens);
    }
    result.text = std::move(text);
    result.completion_tokens = words;
    return result;
}

std::vector<double> hash_unit_vector(std::string_view text, std::size_t dim) {
    Rng rng(fnv1a64(text));
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    for (auto& x : v) {
        x = uniform_real(rng) * 2.0 - 1.0;
        norm_sq += x * x;
    }
    double norm = std::sqrt(norm_sq);
    if (norm < 1e-12) {
        v.assign(dim, 0.0);
        v[0] = 1.0;
        return v;
    }
    for (auto& x : v) {
        x /= norm;
    }
    return v;
}

std::vector<std::vector<double>> MockClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        raise(Errc::Config, "embed requires a non-empty batch");
    }
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) {
            raise(Errc::Config, "embed requires non-empty texts");
        }
        out.push_back(hash_unit_vector(text, config_.embedding_dim));
    }
    return out;
}

} // namespace forge
