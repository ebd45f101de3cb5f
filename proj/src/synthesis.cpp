#include "forge/synthesis.hpp"

#include "forge/error.hpp"
#include "forge/text.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_set>

namespace forge {

const char* filter_outcome_name(FilterOutcome outcome) {
    switch (outcome) {
    case FilterOutcome::Retained: return "retained";
    case FilterOutcome::RejectedNoQuestionMark: return "rejected_no_question_mark";
    case FilterOutcome::RejectedTooLong: return "rejected_too_long";
    case FilterOutcome::RejectedEmpty: return "rejected_empty";
    }
    return "unknown";
}

FilterResult filter_query(std::string_view raw) {
    std::string_view trimmed = trim_view(raw);
    if (trimmed.empty()) {
        return {FilterOutcome::RejectedEmpty, std::nullopt};
    }
    if (utf8_scalar_count(trimmed) > kMaxQueryChars) {
        return {FilterOutcome::RejectedTooLong, std::nullopt};
    }
    // '?' here is the ASCII question mark; in UTF-8 it can only appear as a
    // standalone scalar, so a byte test on the trimmed tail is exact.
    if (trimmed.back() != '?') {
        return {FilterOutcome::RejectedNoQuestionMark, std::nullopt};
    }
    return {FilterOutcome::Retained, std::string(trimmed)};
}

namespace {

GenMeta make_meta(const Client& client, const SamplingParams& params, const std::string& request_id) {
    GenMeta meta;
    meta.model = client.backend_name();
    meta.temperature = params.temperature;
    meta.top_p = params.top_p;
    meta.request_id = request_id;
    return meta;
}

} // namespace

QueryCandidate generate_query(std::span<const Document> docs, const std::string& gold_id,
                              const ChatTemplate& tmpl, const SamplingParams& params, Client& client) {
    RenderedPrompt prompt = render_query_elicitation(tmpl, docs);
    CompletionResult completion = client.complete(prompt, params);

    QueryCandidate candidate;
    candidate.doc_id = gold_id;
    candidate.raw_completion = completion.text;
    candidate.meta = make_meta(client, params, completion.request_id);

    FilterResult filtered = filter_query(strip_trailing_markers(completion.text, params.stop));
    candidate.outcome = filtered.outcome;
    candidate.query = std::move(filtered.query);
    return candidate;
}

QueryCandidate generate_query(const Document& doc, const ChatTemplate& tmpl,
                              const SamplingParams& params, Client& client) {
    return generate_query(std::span<const Document>(&doc, 1), doc.id, tmpl, params, client);
}

std::string generate_response(const ContextLayout& layout, std::string_view query,
                              const ChatTemplate& tmpl, const SamplingParams& params, Client& client,
                              const CorpusStore& store) {
    std::vector<Document> docs;
    docs.reserve(layout.doc_ids.size());
    for (const auto& id : layout.doc_ids) {
        docs.push_back(store.by_id(id));
    }
    RenderedPrompt prompt = render_response_prompt(tmpl, docs, query);
    CompletionResult completion = client.complete(prompt, params);

    std::vector<std::string> markers = params.stop;
    markers.push_back(tmpl.end_of_turn);
    std::string response = strip_trailing_markers(completion.text, markers);
    if (response.empty()) {
        raise(Errc::EmptyResponse, "backend returned a whitespace-only response");
    }
    return response;
}

InstructionTriplet extend_multidoc(const InstructionTriplet& triplet, const CorpusStore& store,
                                   std::size_t n, Rng& rng) {
    if (triplet.context.doc_ids.empty()) {
        raise(Errc::Config, "extend_multidoc requires a triplet with a gold document");
    }
    const std::string& gold_id = triplet.context.doc_ids[triplet.context.gold_index];
    if (store.size() == 0 || store.size() - 1 < n) {
        raise(Errc::InsufficientDocuments,
              "corpus has fewer than n=" + std::to_string(n) + " documents besides the gold one");
    }

    std::size_t x = static_cast<std::size_t>(uniform_below(rng, n + 1));
    std::vector<Document> distractors = sample_documents(store, x, {gold_id}, rng);
    std::size_t gold_pos = static_cast<std::size_t>(uniform_below(rng, x + 1));

    InstructionTriplet out = triplet;
    out.context.doc_ids.clear();
    out.context.doc_ids.reserve(x + 1);
    for (std::size_t i = 0; i < x; ++i) {
        out.context.doc_ids.push_back(distractors[i].id);
    }
    out.context.doc_ids.insert(out.context.doc_ids.begin() + static_cast<std::ptrdiff_t>(gold_pos),
                               gold_id);
    out.context.gold_index = gold_pos;
    return out;
}

void PipelineConfig::validate(const CorpusStore& store) const {
    tmpl.validate();
    elicit.validate();
    respond.validate();
    if (workers < 1) {
        raise(Errc::Config, "pipeline.workers must be >= 1");
    }
    if (queries_per_doc < 1) {
        raise(Errc::Config, "pipeline.queries_per_doc must be >= 1");
    }
    if (!store.empty() && multidoc_n > store.size() - 1) {
        raise(Errc::Config, "pipeline.multidoc_n=" + std::to_string(multidoc_n) +
                                " exceeds corpus size minus the gold document (" +
                                std::to_string(store.size() - 1) + ")");
    }
}

Json RunReport::to_json() const {
    Json value;
    value["docs_processed"] = docs_processed;
    value["attempts"] = attempts;
    value["retained"] = retained;
    value["rejected_no_question_mark"] = rejected_no_question_mark;
    value["rejected_too_long"] = rejected_too_long;
    value["rejected_empty"] = rejected_empty;
    value["empty_response"] = empty_response;
    value["backend_failures"] = backend_failures;
    value["emitted"] = emitted;
    value["prompt_tokens"] = prompt_tokens;
    value["completion_tokens"] = completion_tokens;
    return value;
}

namespace {

struct ItemResult {
    std::optional<InstructionTriplet> triplet;
    std::optional<FilterOutcome> outcome;
    bool empty_response = false;
    bool backend_failure = false;
    std::string error_message;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
};

class TokenTally : public Client {
public:
    TokenTally(Client& inner, ItemResult& result) : inner_(inner), result_(result) {}

    CompletionResult complete(const RenderedPrompt& prompt, const SamplingParams& params) override {
        CompletionResult r = inner_.complete(prompt, params);
        result_.prompt_tokens += r.prompt_tokens;
        result_.completion_tokens += r.completion_tokens;
        return r;
    }

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        return inner_.embed(texts);
    }

    std::string backend_name() const override { return inner_.backend_name(); }

private:
    Client& inner_;
    ItemResult& result_;
};

} // namespace

RunReport run_pipeline(const CorpusStore& store, Client& client, const PipelineConfig& cfg,
                       const std::function<void(const InstructionTriplet&)>& sink) {
    cfg.validate(store);

    const std::size_t doc_count =
        cfg.limit == 0 ? store.size() : std::min<std::size_t>(cfg.limit, store.size());
    const std::size_t per_doc = cfg.queries_per_doc;
    const std::size_t item_count = doc_count * per_doc;

    auto process_item = [&](std::size_t item) -> ItemResult {
        ItemResult result;
        TokenTally tally(client, result);
        const std::size_t doc_index = item / per_doc;
        const std::size_t attempt = item % per_doc;
        const Document& doc = store.at(doc_index);
        try {
            SamplingParams elicit = cfg.elicit;
            // resample with progressively hotter decoding for extra queries
            elicit.temperature = std::min(2.0, elicit.temperature + 0.1 * static_cast<double>(attempt));
            elicit.seed = derive_seed(cfg.seed, "elicit", item);

            SamplingParams respond = cfg.respond;
            respond.seed = derive_seed(cfg.seed, "respond", item);

            Rng extend_rng(derive_seed(cfg.seed, "extend", item));

            InstructionTriplet triplet;
            triplet.id = per_doc == 1 ? doc.id : doc.id + "#" + std::to_string(attempt);
            triplet.context.separator = cfg.tmpl.doc_separator;

            QueryCandidate candidate;
            if (cfg.elicit_on_multidoc) {
                // bullet-list reading: build D_multi first, elicit over it
                std::size_t x = static_cast<std::size_t>(uniform_below(extend_rng, cfg.multidoc_n + 1));
                std::vector<Document> distractors = sample_documents(store, x, {doc.id}, extend_rng);
                std::size_t gold_pos = static_cast<std::size_t>(uniform_below(extend_rng, x + 1));
                std::vector<Document> docs = std::move(distractors);
                docs.insert(docs.begin() + static_cast<std::ptrdiff_t>(gold_pos), doc);
                for (const auto& d : docs) {
                    triplet.context.doc_ids.push_back(d.id);
                }
                triplet.context.gold_index = gold_pos;

                candidate = generate_query(docs, doc.id, cfg.tmpl, elicit, tally);
                result.outcome = candidate.outcome;
                if (candidate.outcome != FilterOutcome::Retained) {
                    return result;
                }
                triplet.query = *candidate.query;
                triplet.meta = candidate.meta;
                triplet.response =
                    generate_response(triplet.context, triplet.query, cfg.tmpl, respond, tally, store);
            } else {
                candidate = generate_query(doc, cfg.tmpl, elicit, tally);
                result.outcome = candidate.outcome;
                if (candidate.outcome != FilterOutcome::Retained) {
                    return result;
                }
                triplet.context.doc_ids = {doc.id};
                triplet.context.gold_index = 0;
                triplet.query = *candidate.query;
                triplet.meta = candidate.meta;
                triplet.response =
                    generate_response(triplet.context, triplet.query, cfg.tmpl, respond, tally, store);
                triplet = extend_multidoc(triplet, store, cfg.multidoc_n, extend_rng);
            }
            result.triplet = std::move(triplet);
        } catch (const Error& e) {
            if (e.code() == Errc::EmptyResponse) {
                result.empty_response = true;
            } else {
                result.backend_failure = true;
                result.error_message = e.what();
            }
        }
        return result;
    };

    RunReport report;
    report.docs_processed = doc_count;

    std::mutex mutex;
    std::condition_variable ready;
    std::map<std::size_t, ItemResult> done;
    std::atomic<std::size_t> next_item{0};

    const int worker_count = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(cfg.workers), std::max<std::size_t>(item_count, 1)));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) {
        workers.emplace_back([&] {
            while (true) {
                std::size_t item = next_item.fetch_add(1);
                if (item >= item_count) {
                    return;
                }
                ItemResult result = process_item(item);
                {
                    std::lock_guard<std::mutex> lock(mutex);
                    done.emplace(item, std::move(result));
                }
                ready.notify_one();
            }
        });
    }

    // single collector restores input order and owns all bookkeeping
    for (std::size_t expected = 0; expected < item_count; ++expected) {
        ItemResult result;
        {
            std::unique_lock<std::mutex> lock(mutex);
            ready.wait(lock, [&] { return done.count(expected) > 0; });
            auto node = done.extract(expected);
            result = std::move(node.mapped());
        }
        ++report.attempts;
        report.prompt_tokens += result.prompt_tokens;
        report.completion_tokens += result.completion_tokens;
        if (result.backend_failure) {
            ++report.backend_failures;
            std::cerr << "warning: item " << expected << " skipped: " << result.error_message << "\n";
            continue;
        }
        if (result.outcome) {
            switch (*result.outcome) {
            case FilterOutcome::Retained: ++report.retained; break;
            case FilterOutcome::RejectedNoQuestionMark: ++report.rejected_no_question_mark; break;
            case FilterOutcome::RejectedTooLong: ++report.rejected_too_long; break;
            case FilterOutcome::RejectedEmpty: ++report.rejected_empty; break;
            }
        }
        if (result.empty_response) {
            ++report.empty_response;
            continue;
        }
        if (result.triplet) {
            ++report.emitted;
            sink(*result.triplet);
        }
    }

    for (auto& worker : workers) {
        worker.join();
    }
    return report;
}

} // namespace forge
