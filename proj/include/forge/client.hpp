#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forge/chat_template.hpp"
#include "forge/rng.hpp"

namespace forge {

struct SamplingParams {
    double temperature = 1.0;
    double top_p = 1.0;
    int max_tokens = 1024;
    std::vector<std::string> stop;
    std::optional<std::uint64_t> seed;

    void validate() const;
};

// Elicitation favors diversity (t=1.0, top_p=1.0) and stops at the
// template's end_of_turn or assistant prefix; response generation favors
// stability (t=0.7, top_p=0.9). All overridable.
SamplingParams default_elicit_params(const ChatTemplate& tmpl);
SamplingParams default_respond_params(const ChatTemplate& tmpl);

enum class FinishReason { Stop, Length, Error };

const char* finish_reason_name(FinishReason reason);

struct CompletionResult {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::string request_id;
};

struct BackoffPolicy {
    int retry_limit = 3;
    std::chrono::milliseconds initial{250};
    std::chrono::milliseconds max{8000};
};

// Jittered exponential backoff, clamped so consecutive delays never
// decrease. attempt is zero-based (delay before retry #attempt+1).
std::vector<std::chrono::milliseconds> backoff_schedule(const BackoffPolicy& policy, Rng& rng);

struct ClientConfig {
    std::string endpoint; // e.g. http://localhost:8000
    std::string api_key;  // resolved from FORGE_API_KEY when empty
    std::string model;
    int max_in_flight = 4;
    BackoffPolicy backoff;
    std::chrono::milliseconds timeout{60000};
    std::string completions_path = "/v1/completions";
    std::string embeddings_path = "/v1/embeddings";

    void validate() const;
};

// Text-completion backend. complete() returns the raw continuation of the
// prompt text (completions-style; the template module already inserted role
// tokens, chat endpoints would re-wrap and break the elicitation contract).
// Implementations are shareable across workers and internally enforce their
// in-flight bound; results may arrive out of order.
class Client {
public:
    virtual ~Client() = default;

    virtual CompletionResult complete(const RenderedPrompt& prompt, const SamplingParams& params) = 0;

    // One vector per input, uniform dimensionality per batch.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;

    virtual std::string backend_name() const = 0;
};

} // namespace forge
