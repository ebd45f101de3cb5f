#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/corpus.hpp"
#include "forge/io.hpp"
#include "forge/triplet.hpp"

namespace forge {

// Per-model-family chat token strings. pre_query is the text that opens a
// user turn; appending it to raw document text is what makes an aligned
// model continue with a query. Templates are immutable value objects and all
// render operations are pure.
struct ChatTemplate {
    std::string name;
    std::string pre_query;
    std::string pre_response;
    std::string end_of_turn;
    std::string doc_separator;
    std::vector<std::string> stop_strings;

    // pre_query/pre_response non-empty; stop_strings contains end_of_turn.
    void validate() const;
};

ChatTemplate builtin_template(const std::string& family); // "llama3" | "qwen25"

ChatTemplate template_from_json(const Json& value);
Json template_to_json(const ChatTemplate& tmpl);
ChatTemplate load_template(const std::string& builtin_name_or_json_path);

enum class PromptKind { QueryElicitation, ResponsePrompt, TrainingSample };

struct RenderedPrompt {
    std::string text;
    PromptKind kind = PromptKind::QueryElicitation;
    std::vector<std::string> context_doc_ids;
};

// join(doc texts, doc_separator) + pre_query, byte-exact with no added
// whitespace. The prompt never contains instruction text asking for a
// question; the chat-format continuation is the whole trick.
RenderedPrompt render_query_elicitation(const ChatTemplate& tmpl, std::span<const Document> docs);

// join(doc texts, doc_separator) + pre_query + query + pre_response.
RenderedPrompt render_response_prompt(const ChatTemplate& tmpl, std::span<const Document> docs,
                                      std::string_view query);

// Full single-exchange training text:
//   context + pre_query + query + pre_response + response + end_of_turn
// Context is empty for short-context triplets (layout with no documents).
std::string format_sample(const ChatTemplate& tmpl, const InstructionTriplet& triplet,
                          const CorpusStore& store);

} // namespace forge
