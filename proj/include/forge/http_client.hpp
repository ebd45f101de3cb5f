#pragma once

#include <memory>
#include <string>

#include "forge/client.hpp"

namespace forge {

// OpenAI-compatible completions/embeddings client over HTTP. 429/5xx and
// transport errors are retried with jittered exponential backoff; other 4xx
// surface immediately as BackendRejected. Truncation is not an error
// (finish_reason=Length).
class HttpClient : public Client {
public:
    explicit HttpClient(ClientConfig config);
    ~HttpClient() override;

    CompletionResult complete(const RenderedPrompt& prompt, const SamplingParams& params) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string backend_name() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// FORGE_API_KEY from the environment when config.api_key is empty.
std::string resolve_api_key(const std::string& configured);

} // namespace forge
