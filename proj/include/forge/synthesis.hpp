#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "forge/chat_template.hpp"
#include "forge/client.hpp"
#include "forge/corpus.hpp"
#include "forge/triplet.hpp"

namespace forge {

enum class FilterOutcome { Retained, RejectedNoQuestionMark, RejectedTooLong, RejectedEmpty };

const char* filter_outcome_name(FilterOutcome outcome);

// Backends sometimes continue the document instead of asking something, so
// completions are kept only when they look interrogative: trimmed, ending in
// '?', and at most kMaxQueryChars Unicode scalars (longer texts are almost
// always descriptive passages). Length is tested before the question-mark
// heuristic so oversized continuations report as too long.
inline constexpr std::size_t kMaxQueryChars = 1500;

struct FilterResult {
    FilterOutcome outcome = FilterOutcome::RejectedEmpty;
    std::optional<std::string> query; // present iff Retained
};

FilterResult filter_query(std::string_view raw);

struct QueryCandidate {
    std::string doc_id;
    std::string raw_completion;
    std::optional<std::string> query;
    FilterOutcome outcome = FilterOutcome::RejectedEmpty;
    GenMeta meta;
};

QueryCandidate generate_query(const Document& doc, const ChatTemplate& tmpl,
                              const SamplingParams& params, Client& client);

// Multi-document variant: elicits over the whole context, gold_id marks the
// document the candidate is attributed to.
QueryCandidate generate_query(std::span<const Document> docs, const std::string& gold_id,
                              const ChatTemplate& tmpl, const SamplingParams& params, Client& client);

// Backend continuation of the response prompt over the layout's documents,
// with any trailing end_of_turn/stop marker stripped. Whitespace-only
// completions raise EmptyResponse.
std::string generate_response(const ContextLayout& layout, std::string_view query,
                              const ChatTemplate& tmpl, const SamplingParams& params, Client& client,
                              const CorpusStore& store);

// Draws x uniform on {0..n}, samples x distractors excluding the gold
// document, and re-inserts the gold document at a uniform position among the
// x+1 slots. Query and response are untouched. n=0 keeps the single-document
// layout.
InstructionTriplet extend_multidoc(const InstructionTriplet& triplet, const CorpusStore& store,
                                   std::size_t n, Rng& rng);

struct PipelineConfig {
    ChatTemplate tmpl;
    SamplingParams elicit;
    SamplingParams respond;
    std::size_t multidoc_n = 10;
    std::size_t queries_per_doc = 1;
    // When set, distractors are drawn first and the query is elicited over
    // the full multi-document context (one elicitation per context, more
    // tokens per instruction). Default keeps the cheap post-hoc mixing.
    bool elicit_on_multidoc = false;
    std::uint64_t seed = 0;
    std::size_t limit = 0; // 0 = whole corpus
    int workers = 1;

    void validate(const CorpusStore& store) const;
};

struct RunReport {
    std::size_t docs_processed = 0;
    std::size_t attempts = 0;
    std::size_t retained = 0;
    std::size_t rejected_no_question_mark = 0;
    std::size_t rejected_too_long = 0;
    std::size_t rejected_empty = 0;
    std::size_t empty_response = 0;
    std::size_t backend_failures = 0;
    std::size_t emitted = 0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;

    Json to_json() const;
};

// elicit -> filter -> respond -> extend for every selected document, fanned
// out over cfg.workers threads. Triplets reach the sink in input-document
// order no matter how the backend reorders completions; per-item randomness
// is derived from (seed, item index) so the worker count never changes the
// output. Per-item backend failures are counted and skipped.
RunReport run_pipeline(const CorpusStore& store, Client& client, const PipelineConfig& cfg,
                       const std::function<void(const InstructionTriplet&)>& sink);

} // namespace forge
