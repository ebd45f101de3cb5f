#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forge/client.hpp"

namespace forge {

// Deterministic offline stand-in for the completion/embedding backend.
//
// Completion lookup order for a prompt P:
//   1. completions[P]                      (exact text key)
//   2. completions["#" + hex16(fnv1a64(P))] (hash key)
//   3. first contains_rules entry whose needle is a substring of P
//   4. the hash rule: words are drawn from P by a generator seeded with
//      fnv1a64(P) ^ splitmix64(params.seed); prompts ending in a
//      respond_marker get a statement, everything else gets a question.
// Identical (prompt, params.seed) always yields the identical result, which
// is what makes end-to-end runs byte-reproducible. Mock token counts are
// whitespace-delimited words.
struct MockConfig {
    std::map<std::string, std::string> completions;
    std::vector<std::pair<std::string, std::string>> contains_rules;
    std::set<std::string> reject_prompts;       // simulate 4xx, never retried
    std::map<std::string, int> fail_prompts;    // per-prompt transient failures
    int fail_first = 0;                         // global transient failures
    bool hash_fallback = true;
    std::vector<std::string> respond_markers;   // defaults: builtin pre_response strings
    std::size_t embedding_dim = 64;
    int latency_max_ms = 0;                     // deterministic pseudo-latency
    int max_in_flight = 8;
    BackoffPolicy backoff{3, std::chrono::milliseconds(0), std::chrono::milliseconds(0)};

    static MockConfig from_json(const Json& value);
    static MockConfig from_file(const std::filesystem::path& path);
};

class MockClient : public Client {
public:
    explicit MockClient(MockConfig config = MockConfig());

    CompletionResult complete(const RenderedPrompt& prompt, const SamplingParams& params) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string backend_name() const override { return "mock"; }

    // instrumentation
    int max_observed_in_flight() const { return max_in_flight_seen_.load(); }
    std::size_t request_count() const { return requests_.load(); }
    std::size_t retry_count() const { return retries_.load(); }
    bool in_flight_bound_violated() const { return bound_violated_.load(); }

private:
    bool should_fail_transiently(const std::string& prompt);
    std::string resolve_completion(const std::string& prompt, const SamplingParams& params) const;

    MockConfig config_;
    std::mutex mutex_;
    std::condition_variable slot_available_;
    int in_flight_ = 0;
    int fail_budget_ = 0;
    std::map<std::string, int> prompt_fail_budget_;
    std::atomic<int> max_in_flight_seen_{0};
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> retries_{0};
    std::atomic<bool> bound_violated_{false};
};

std::vector<double> hash_unit_vector(std::string_view text, std::size_t dim);

} // namespace forge
