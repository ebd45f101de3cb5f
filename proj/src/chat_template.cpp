#include "forge/chat_template.hpp"

#include "forge/error.hpp"

#include <algorithm>

namespace forge {

void ChatTemplate::validate() const {
    if (pre_query.empty()) {
        raise(Errc::Config, "template '" + name + "': pre_query must be non-empty");
    }
    if (pre_response.empty()) {
        raise(Errc::Config, "template '" + name + "': pre_response must be non-empty");
    }
    if (std::find(stop_strings.begin(), stop_strings.end(), end_of_turn) == stop_strings.end()) {
        raise(Errc::Config, "template '" + name + "': stop_strings must contain end_of_turn");
    }
}

ChatTemplate builtin_template(const std::string& family) {
    ChatTemplate tmpl;
    if (family == "llama3") {
        tmpl.name = "llama3";
        tmpl.pre_query = "<|start_header_id|>user<|end_header_id|>\n\n";
        tmpl.pre_response = "<|eot_id|><|start_header_id|>assistant<|end_header_id|>\n\n";
        tmpl.end_of_turn = "<|eot_id|>";
        tmpl.doc_separator = "<|doc_sep|>";
        tmpl.stop_strings = {"<|eot_id|>", "<|end_of_text|>"};
    } else if (family == "qwen25") {
        tmpl.name = "qwen25";
        tmpl.pre_query = "<|im_start|>user\n";
        tmpl.pre_response = "<|im_end|>\n<|im_start|>assistant\n";
        tmpl.end_of_turn = "<|im_end|>";
        tmpl.doc_separator = "<|doc_sep|>";
        tmpl.stop_strings = {"<|im_end|>", "<|endoftext|>"};
    } else {
        raise(Errc::UnknownFamily, "no builtin template for '" + family + "'");
    }
    tmpl.validate();
    return tmpl;
}

ChatTemplate template_from_json(const Json& value) {
    ChatTemplate tmpl;
    try {
        tmpl.name = value.at("name").get<std::string>();
        tmpl.pre_query = value.at("pre_query").get<std::string>();
        tmpl.pre_response = value.at("pre_response").get<std::string>();
        tmpl.end_of_turn = value.at("end_of_turn").get<std::string>();
        tmpl.doc_separator = value.at("doc_separator").get<std::string>();
        tmpl.stop_strings = value.at("stop_strings").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::Config, std::string("bad template object: ") + e.what());
    }
    tmpl.validate();
    return tmpl;
}

Json template_to_json(const ChatTemplate& tmpl) {
    Json value;
    value["name"] = tmpl.name;
    value["pre_query"] = tmpl.pre_query;
    value["pre_response"] = tmpl.pre_response;
    value["end_of_turn"] = tmpl.end_of_turn;
    value["doc_separator"] = tmpl.doc_separator;
    value["stop_strings"] = tmpl.stop_strings;
    return value;
}

ChatTemplate load_template(const std::string& builtin_name_or_json_path) {
    if (builtin_name_or_json_path == "llama3" || builtin_name_or_json_path == "qwen25") {
        return builtin_template(builtin_name_or_json_path);
    }
    if (builtin_name_or_json_path.ends_with(".json")) {
        return template_from_json(read_json_file(builtin_name_or_json_path));
    }
    raise(Errc::UnknownFamily,
          "template '" + builtin_name_or_json_path + "' is neither a builtin family nor a .json file");
}

namespace {

std::string render_context(const ChatTemplate& tmpl, std::span<const Document> docs) {
    std::string out;
    std::size_t total = 0;
    for (const auto& doc : docs) {
        total += doc.text.size() + tmpl.doc_separator.size();
    }
    out.reserve(total);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) {
            out += tmpl.doc_separator;
        }
        out += docs[i].text;
    }
    return out;
}

std::vector<std::string> doc_ids_of(std::span<const Document> docs) {
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const auto& doc : docs) {
        ids.push_back(doc.id);
    }
    return ids;
}

} // namespace

RenderedPrompt render_query_elicitation(const ChatTemplate& tmpl, std::span<const Document> docs) {
    if (docs.empty()) {
        raise(Errc::Config, "query elicitation requires at least one document");
    }
    RenderedPrompt prompt;
    prompt.kind = PromptKind::QueryElicitation;
    prompt.context_doc_ids = doc_ids_of(docs);
    prompt.text = render_context(tmpl, docs) + tmpl.pre_query;
    return prompt;
}

RenderedPrompt render_response_prompt(const ChatTemplate& tmpl, std::span<const Document> docs,
                                      std::string_view query) {
    if (docs.empty()) {
        raise(Errc::Config, "response prompt requires at least one document");
    }
    if (query.empty()) {
        raise(Errc::Config, "response prompt requires a non-empty query");
    }
    RenderedPrompt prompt;
    prompt.kind = PromptKind::ResponsePrompt;
    prompt.context_doc_ids = doc_ids_of(docs);
    prompt.text = render_context(tmpl, docs) + tmpl.pre_query;
    prompt.text += query;
    prompt.text += tmpl.pre_response;
    return prompt;
}

std::string format_sample(const ChatTemplate& tmpl, const InstructionTriplet& triplet,
                          const CorpusStore& store) {
    if (triplet.query.empty() || triplet.response.empty()) {
        raise(Errc::IncompleteTriplet, "triplet '" + triplet.id + "' is missing query or response");
    }
    std::string out;
    for (std::size_t i = 0; i < triplet.context.doc_ids.size(); ++i) {
        if (i > 0) {
            out += triplet.context.separator;
        }
        out += store.by_id(triplet.context.doc_ids[i]).text;
    }
    out += tmpl.pre_query;
    out += triplet.query;
    out += tmpl.pre_response;
    out += triplet.response;
    out += tmpl.end_of_turn;
    return out;
}

} // namespace forge
