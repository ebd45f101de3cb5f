// Acceptance suite: one pass/fail line per criterion. Exits non-zero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "forge/analysis.hpp"
#include "forge/chat_template.hpp"
#include "forge/corpus.hpp"
#include "forge/mock_client.hpp"
#include "forge/packer.hpp"
#include "forge/synthesis.hpp"
#include "forge/text.hpp"
#include "pmix_oracle.hpp"
#include "test_util.hpp"

using namespace forge;

namespace {

struct AcceptanceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw AcceptanceFailure(message);
    }
}

std::string load_golden(const std::string& name) {
    std::string path = std::string(FORGE_TEST_DATA_DIR) + "/golden/" + name;
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "missing golden file " + path);
    std::ostringstream content;
    content << in.rdbuf();
    std::string text = content.str();
    // goldens are stored with exactly one trailing LF
    require(!text.empty() && text.back() == '\n', "golden file must end with LF: " + path);
    text.pop_back();
    return text;
}

// deterministic pseudo-text built from a 16-char pattern, cheap at any length
std::string patterned_text(Rng& rng, std::size_t len) {
    std::string pattern;
    for (int i = 0; i < 16; ++i) {
        pattern += static_cast<char>('a' + uniform_below(rng, 26));
    }
    std::string out;
    out.reserve(len);
    while (out.size() < len) {
        out.append(pattern, 0, std::min(pattern.size(), len - out.size()));
    }
    return out;
}

std::vector<FormattedSample> build_pool(Rng& rng, std::size_t count, std::size_t min_len,
                                        std::size_t max_len, SampleKind kind,
                                        const std::string& prefix, const TokenizerHandle& tok) {
    std::vector<FormattedSample> pool;
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t len = min_len + uniform_below(rng, max_len - min_len + 1);
        pool.push_back(
            make_formatted_sample(patterned_text(rng, len), kind, prefix + std::to_string(i), tok));
    }
    return pool;
}

// ------------------------------------------------------------------ criteria

// Query filter matches the documented rules on a 12-case suite.
void criterion_filter_fidelity() {
    struct Case {
        std::string input;
        FilterOutcome expected;
        const char* label;
    };
    std::string exactly_1500(1499, 'a');
    exactly_1500 += '?';
    std::string over_1500(1500, 'a');
    over_1500 += '?';
    std::string cjk_1500;
    for (int i = 0; i < 1499; ++i) {
        cjk_1500 += "\xe6\xb0\xb4"; // multi-byte scalars: bytes would overcount
    }
    cjk_1500 += '?';
    std::string continuation(1600, 'x');

    const std::vector<Case> cases = {
        {"What causes tides?", FilterOutcome::Retained, "plain question"},
        {"Tides are caused by the moon.", FilterOutcome::RejectedNoQuestionMark, "statement"},
        {exactly_1500, FilterOutcome::Retained, "1500 chars boundary"},
        {over_1500, FilterOutcome::RejectedTooLong, "1501 chars boundary"},
        {"  What? \n", FilterOutcome::Retained, "whitespace padded"},
        {"", FilterOutcome::RejectedEmpty, "empty"},
        {" \t\n ", FilterOutcome::RejectedEmpty, "whitespace only"},
        {cjk_1500, FilterOutcome::Retained, "non-ASCII text, scalar counting"},
        {"\xe4\xbd\x95\xef\xbc\x9f", FilterOutcome::RejectedNoQuestionMark, "fullwidth mark"},
        {continuation, FilterOutcome::RejectedTooLong, "document continuation"},
        {"Why?\n\n", FilterOutcome::Retained, "trailing newlines"},
        {"Is it? Yes.", FilterOutcome::RejectedNoQuestionMark, "mid-string question mark"},
    };
    require(cases.size() == 12, "suite must have 12 cases");
    for (const auto& c : cases) {
        FilterResult result = filter_query(c.input);
        require(result.outcome == c.expected,
                std::string("case '") + c.label + "': got " + filter_outcome_name(result.outcome));
        require((result.outcome == FilterOutcome::Retained) == result.query.has_value(),
                std::string("case '") + c.label + "': query presence mismatch");
    }
    require(filter_query("  What? \n").query.value() == "What?", "trim result");
}

// Independent oracle replaying the seeded stream matches the packer on 1,000
// random configurations; zero mismatches allowed.
void criterion_algorithm1_fidelity() {
    TokenizerHandle tok = char_tokenizer();
    Rng meta(20240501);
    for (int round = 0; round < 1000; ++round) {
        std::size_t max_tokens = 256 + uniform_below(meta, 65536 - 256 + 1);
        // two length regimes: many small appends / few large ones
        std::size_t min_len = round % 2 == 0 ? std::max<std::size_t>(max_tokens / 200, 1)
                                             : std::max<std::size_t>(max_tokens / 50, 1);
        std::size_t max_len = round % 2 == 0 ? std::max<std::size_t>(max_tokens / 20, 2)
                                             : std::max<std::size_t>(max_tokens / 6, 2);
        std::size_t short_count = 5 + uniform_below(meta, 496);
        std::size_t long_count = 5 + uniform_below(meta, 496);
        auto shorts = build_pool(meta, short_count, min_len, max_len, SampleKind::Short, "s", tok);
        auto longs = build_pool(meta, long_count, min_len, max_len, SampleKind::Long, "l", tok);

        PMixConfig config;
        config.short_prefix_count = uniform_below(meta, 4);
        config.long_prob = uniform_real(meta);
        config.max_tokens = max_tokens;
        config.sep = std::string(uniform_below(meta, 4), '|');

        std::uint64_t seed = derive_seed(99, "accept-alg1", static_cast<std::uint64_t>(round));
        Rng packer_rng(seed);
        ConstructStats stats;
        PackedSequence seq = construct_hybrid_sample(shorts, longs, config, tok, packer_rng, &stats);
        forge::test::OracleResult expected =
            forge::test::replay_hybrid_sample(shorts, longs, config, tok, Rng(seed));

        require(seq.text == expected.text, "config " + std::to_string(round) + ": text mismatch");
        require(seq.total_tokens == expected.total_tokens,
                "config " + std::to_string(round) + ": total mismatch");
        require(seq.segments.size() == expected.segments.size(),
                "config " + std::to_string(round) + ": segment count mismatch");
        for (std::size_t i = 0; i < seq.segments.size(); ++i) {
            bool same = seq.segments[i].token_offset == expected.segments[i].offset &&
                        seq.segments[i].token_len == expected.segments[i].len &&
                        seq.segments[i].kind == expected.segments[i].kind &&
                        seq.segments[i].origin_id == expected.segments[i].origin_id;
            require(same, "config " + std::to_string(round) + ": segment " + std::to_string(i) +
                              " mismatch");
        }
        require(stats.bernoulli_draws == expected.bernoulli_draws &&
                    stats.long_branch_draws == expected.long_branch_draws,
                "config " + std::to_string(round) + ": draw accounting mismatch");
    }
}

// Long-branch frequency within 0.4 +/- 0.02 over >= 10,000 draws; the token
// budget holds for every sequence of a 1,000-config fuzz sweep.
void criterion_pmix_statistics() {
    TokenizerHandle tok = char_tokenizer();
    Rng pool_rng(31);
    auto shorts = build_pool(pool_rng, 3000, 10, 10, SampleKind::Short, "s", tok);
    auto longs = build_pool(pool_rng, 1500, 100, 100, SampleKind::Long, "l", tok);
    PMixConfig config;
    config.short_prefix_count = 1;
    config.long_prob = 0.4;
    config.max_tokens = 10000;
    config.sep = "|";

    PackReport report;
    pack_dataset(shorts, longs, config, tok, 424242, 200, [](const PackedSequence&) {}, &report);
    require(report.bernoulli_draws >= 10000,
            "only " + std::to_string(report.bernoulli_draws) + " loop draws");
    double freq = report.long_branch_frequency();
    require(std::abs(freq - 0.4) <= 0.02,
            "long-branch frequency " + std::to_string(freq) + " outside 0.4 +/- 0.02");

    Rng meta(32);
    for (int round = 0; round < 1000; ++round) {
        std::size_t max_tokens = 128 + uniform_below(meta, 4096);
        auto fuzz_shorts = build_pool(meta, 2 + uniform_below(meta, 40), 1,
                                      std::max<std::size_t>(max_tokens / 3, 2), SampleKind::Short,
                                      "s", tok);
        auto fuzz_longs = build_pool(meta, 2 + uniform_below(meta, 40), 1,
                                     std::max<std::size_t>(max_tokens / 2, 2), SampleKind::Long,
                                     "l", tok);
        PMixConfig fuzz;
        fuzz.short_prefix_count = uniform_below(meta, 4);
        fuzz.long_prob = uniform_real(meta);
        fuzz.max_tokens = max_tokens;
        fuzz.sep = std::string(uniform_below(meta, 3), ';');
        TokenizerHandle fuzz_tok = round % 3 == 0 ? approx_tokenizer() : tok;

        Rng rng(derive_seed(5, "accept-fuzz", static_cast<std::uint64_t>(round)));
        PackedSequence seq = construct_hybrid_sample(fuzz_shorts, fuzz_longs, fuzz, fuzz_tok, rng);
        require(seq.total_tokens <= fuzz.max_tokens,
                "config " + std::to_string(round) + ": " + std::to_string(seq.total_tokens) +
                    " tokens exceed L_max " + std::to_string(fuzz.max_tokens));
        require(seq.total_tokens == fuzz_tok.count(seq.text),
                "config " + std::to_string(round) + ": total_tokens is not the recount");
    }
}

// x ~ U{0..10} by chi-square at p > 0.01 over 110,000 draws; the gold
// document appears exactly once; rendered contexts carry doc_count - 1
// separators.
void criterion_multidoc_distribution() {
    CorpusStore store = forge::test::make_synthetic_store(64, 6);
    ChatTemplate tmpl = builtin_template("llama3");
    const std::size_t n = 10;
    const std::size_t rounds = 110000;

    InstructionTriplet base;
    base.id = "doc-0000";
    base.context.doc_ids = {"doc-0000"};
    base.context.gold_index = 0;
    base.context.separator = tmpl.doc_separator;
    base.query = "What does article 0 describe?";
    base.response = "It describes rivers.";

    Rng rng(777);
    std::vector<std::size_t> counts(n + 1, 0);
    for (std::size_t round = 0; round < rounds; ++round) {
        InstructionTriplet out = extend_multidoc(base, store, n, rng);
        const std::size_t x = out.context.doc_ids.size() - 1;
        require(x <= n, "x out of range");
        counts[x] += 1;

        std::size_t gold_seen = 0;
        for (const auto& id : out.context.doc_ids) {
            gold_seen += id == "doc-0000" ? 1 : 0;
        }
        require(gold_seen == 1, "gold document must appear exactly once");
        require(out.context.doc_ids[out.context.gold_index] == "doc-0000", "gold_index broken");

        std::vector<Document> docs;
        docs.reserve(out.context.doc_ids.size());
        for (const auto& id : out.context.doc_ids) {
            docs.push_back(store.by_id(id));
        }
        RenderedPrompt prompt = render_query_elicitation(tmpl, docs);
        require(count_occurrences(prompt.text, tmpl.doc_separator) == x,
                "separator count must be doc count - 1");
    }

    double stat = forge::test::chi_square_uniform(counts);
    require(stat < forge::test::chi_square_critical_01(n),
            "chi-square " + std::to_string(stat) + " rejects uniformity at p=0.01");
    for (std::size_t bin = 0; bin <= n; ++bin) {
        double p = static_cast<double>(counts[bin]) / static_cast<double>(rounds);
        require(std::abs(p - 1.0 / 11.0) <= 0.005,
                "bin " + std::to_string(bin) + " frequency " + std::to_string(p) +
                    " outside 1/11 +/- 0.005");
    }
}

// Builtins carry the documented token strings and render X = D + T_pre with
// zero inserted bytes, matching the stored golden files.
void criterion_template_byte_exactness() {
    ChatTemplate llama = builtin_template("llama3");
    ChatTemplate qwen = builtin_template("qwen25");
    require(llama.pre_query.find("<|start_header_id|>user") != std::string::npos,
            "llama3 pre_query missing user header");
    require(qwen.pre_query.find("<|im_start|>user") != std::string::npos,
            "qwen25 pre_query missing user header");
    require(llama.pre_response.find("<|eot_id|><|start_header_id|>assistant<|end_header_id|>") !=
                std::string::npos,
            "llama3 pre_response missing assistant prefix");

    Document doc;
    doc.id = "tides";
    doc.text = "The tide rises and falls twice daily.";
    std::span<const Document> one(&doc, 1);

    RenderedPrompt llama_elicit = render_query_elicitation(llama, one);
    require(llama_elicit.text == load_golden("llama3_elicit.golden"), "llama3 elicit golden");
    require(llama_elicit.text == doc.text + llama.pre_query, "X must be D + T_pre exactly");
    require(llama_elicit.text.compare(0, doc.text.size(), doc.text) == 0,
            "no bytes may precede the document");

    RenderedPrompt qwen_elicit = render_query_elicitation(qwen, one);
    require(qwen_elicit.text == load_golden("qwen25_elicit.golden"), "qwen25 elicit golden");
    require(qwen_elicit.text == doc.text + qwen.pre_query, "X must be D + T_pre exactly");

    CorpusStore store;
    store.add(doc);
    InstructionTriplet triplet;
    triplet.id = "tides";
    triplet.context.doc_ids = {"tides"};
    triplet.context.gold_index = 0;
    triplet.context.separator = llama.doc_separator;
    triplet.query = "Why do tides occur twice a day?";
    triplet.response = "Because of the moon and the sun.";
    require(format_sample(llama, triplet, store) == load_golden("llama3_sample.golden"),
            "llama3 training sample golden");

    CorpusStore ab = forge::test::make_store({{"a", "A"}, {"b", "B"}});
    std::vector<Document> docs = {ab.at(0), ab.at(1)};
    RenderedPrompt qwen_response =
        render_response_prompt(qwen, docs, "Which document mentions rivers?");
    require(qwen_response.text == load_golden("qwen25_response.golden"),
            "qwen25 response prompt golden");
}

// synthesize over 200 documents with the mock backend: byte-identical JSONL
// across two runs and across worker counts 1 vs 8.
void criterion_end_to_end_determinism() {
    forge::test::TempDir dir;
    std::ostringstream corpus;
    for (int i = 0; i < 200; ++i) {
        Json record;
        record["id"] = "doc-" + std::to_string(i);
        std::ostringstream text;
        text << "Entry " << i << " discusses topic " << (i % 13) << " and lists facts about "
             << (i % 7) << " related subjects in plain prose.";
        record["text"] = text.str();
        corpus << record.dump() << "\n";
    }
    auto corpus_path = dir.file("corpus.jsonl");
    forge::test::write_text_file(corpus_path, corpus.str());

    auto run = [&](int workers, const std::string& tag) {
        std::string out = dir.file("out-" + tag + ".jsonl").string();
        std::string command = std::string(FORGE_CLI_PATH) + " synthesize --corpus " +
                              corpus_path.string() +
                              " --template llama3 --mock hash --seed 7 --n 10 --workers " +
                              std::to_string(workers) + " --out " + out + " --report " +
                              dir.file("report-" + tag + ".json").string() + " > /dev/null 2>&1";
        int status = std::system(command.c_str());
        require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "synthesize run failed: " + tag);
        return forge::test::read_text_file(out);
    };

    std::string w1_a = run(1, "w1a");
    std::string w1_b = run(1, "w1b");
    std::string w8 = run(8, "w8");
    require(!w1_a.empty(), "no output emitted");
    require(w1_a == w1_b, "two identical runs differ");
    require(w1_a == w8, "worker counts 1 vs 8 differ");
}

// similarity against a hand-computed cosine oracle, cost means against an
// independent single pass, and the 300x30 default report size.
void criterion_analysis_correctness() {
    // five fixed stub embeddings
    std::vector<std::vector<double>> stubs = {
        {1.0, 0.0, 0.0},
        {0.0, 1.0, 0.0},
        {0.0, 0.0, 1.0},
        {0.6, 0.8, 0.0},
        {0.5, 0.5, std::sqrt(0.5)},
    };
    std::vector<std::string> names = {"q0", "q1", "q2", "q3", "q4"};
    EmbedFn embed = [&](const std::vector<std::string>& texts) {
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) {
            out.push_back(stubs[static_cast<std::size_t>(t[1] - '0')]);
        }
        return out;
    };
    Rng rng(1);
    SimilarityReport report = similarity_report(names, embed, 5, 1, rng);
    require(report.similarities.size() == 10, "expected C(5,2)=10 pairs");

    // independent oracle: direct arithmetic over all pairs
    std::vector<double> expected;
    for (std::size_t i = 0; i < stubs.size(); ++i) {
        for (std::size_t j = i + 1; j < stubs.size(); ++j) {
            double dot = 0.0;
            double na = 0.0;
            double nb = 0.0;
            for (std::size_t d = 0; d < 3; ++d) {
                dot += stubs[i][d] * stubs[j][d];
                na += stubs[i][d] * stubs[i][d];
                nb += stubs[j][d] * stubs[j][d];
            }
            expected.push_back(dot / (std::sqrt(na) * std::sqrt(nb)));
        }
    }
    double expected_mean = 0.0;
    for (double v : expected) {
        expected_mean += v;
    }
    expected_mean /= static_cast<double>(expected.size());
    require(std::abs(report.mean - expected_mean) < 1e-9, "similarity mean differs from oracle");
    std::multiset<double> got(report.similarities.begin(), report.similarities.end());
    for (double v : expected) {
        auto it = got.lower_bound(v - 1e-9);
        require(it != got.end() && std::abs(*it - v) < 1e-9, "pairwise value missing");
        got.erase(it);
    }

    // cost report vs independent single pass, exact equality
    CorpusStore store = forge::test::make_synthetic_store(30);
    TokenizerHandle tok = char_tokenizer();
    std::vector<InstructionTriplet> triplets;
    Rng trip_rng(2);
    for (int i = 0; i < 50; ++i) {
        InstructionTriplet t;
        t.id = "t" + std::to_string(i);
        t.context.separator = "<|doc_sep|>";
        std::size_t docs = 1 + uniform_below(trip_rng, 3);
        std::set<std::size_t> picked;
        while (picked.size() < docs) {
            picked.insert(uniform_below(trip_rng, store.size()));
        }
        for (std::size_t p : picked) {
            t.context.doc_ids.push_back(store.at(p).id);
        }
        t.context.gold_index = 0;
        t.query = "What about entry " + std::to_string(i) + "?";
        t.response = "Entry " + std::to_string(i) + " is fine.";
        triplets.push_back(std::move(t));
    }
    CostReport cost = cost_report(triplets, store, tok, 256);
    double context_sum = 0.0;
    double total_sum = 0.0;
    for (const auto& t : triplets) {
        std::string ctx;
        for (std::size_t i = 0; i < t.context.doc_ids.size(); ++i) {
            if (i > 0) {
                ctx += t.context.separator;
            }
            ctx += store.by_id(t.context.doc_ids[i]).text;
        }
        std::size_t c = tok.count(ctx);
        context_sum += static_cast<double>(c);
        total_sum += static_cast<double>(c + tok.count(t.query) + tok.count(t.response));
    }
    double n = static_cast<double>(triplets.size());
    require(cost.mean_context_tokens == context_sum / n, "context mean not exact");
    require(cost.mean_total_tokens == total_sum / n, "total mean not exact");

    // default-scale report size: 30 x C(300,2)
    std::vector<std::string> many;
    for (int i = 0; i < 300; ++i) {
        many.push_back("query number " + std::to_string(i) + "?");
    }
    EmbedFn hash_embed = [](const std::vector<std::string>& texts) {
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) {
            out.push_back(hash_unit_vector(t, 8));
        }
        return out;
    };
    Rng big_rng(3);
    SimilarityReport big = similarity_report(many, hash_embed, 300, 30, big_rng);
    require(big.similarities.size() == 30u * (300u * 299u / 2u),
            "expected 30 x C(300,2) similarities, got " + std::to_string(big.similarities.size()));
    require(!big.reduced_power, "full-power run misflagged");
}

// Mask spans plus separators exactly partition [0, total_tokens) with no
// overlap, over 10,000 random packed sequences.
void criterion_mask_coverage() {
    TokenizerHandle tok = char_tokenizer();
    Rng meta(88);
    std::size_t sequences = 0;
    while (sequences < 10000) {
        std::size_t max_tokens = 64 + uniform_below(meta, 512);
        auto shorts =
            build_pool(meta, 3 + uniform_below(meta, 20), 1, 48, SampleKind::Short, "s", tok);
        auto longs =
            build_pool(meta, 3 + uniform_below(meta, 20), 1, 96, SampleKind::Long, "l", tok);
        PMixConfig config;
        config.short_prefix_count = uniform_below(meta, 3);
        config.long_prob = uniform_real(meta);
        config.max_tokens = max_tokens;
        config.sep = std::string(uniform_below(meta, 4), '.');

        for (int i = 0; i < 20 && sequences < 10000; ++i, ++sequences) {
            Rng rng(derive_seed(6, "accept-mask", sequences));
            PackedSequence seq = construct_hybrid_sample(shorts, longs, config, tok, rng);
            auto masks = emit_masks(seq);
            require(masks.size() == seq.segments.size(), "one span per segment");
            std::size_t cursor = 0;
            for (const auto& span : masks) {
                require(span.begin == cursor, "spans must be contiguous without overlap");
                require(span.end >= span.begin, "span end before begin");
                cursor = span.end;
            }
            require(cursor == seq.total_tokens,
                    "spans cover " + std::to_string(cursor) + " of " +
                        std::to_string(seq.total_tokens) + " tokens");
        }
    }
}

struct Criterion {
    std::string name;
    std::function<void()> fn;
    double budget_seconds; // 0 = no stated budget
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"filter-fidelity", criterion_filter_fidelity, 1.0},
        {"algorithm1-fidelity", criterion_algorithm1_fidelity, 120.0},
        {"pmix-statistics", criterion_pmix_statistics, 0.0},
        {"multidoc-distribution", criterion_multidoc_distribution, 0.0},
        {"template-byte-exactness", criterion_template_byte_exactness, 0.0},
        {"end-to-end-determinism", criterion_end_to_end_determinism, 60.0},
        {"analysis-correctness", criterion_analysis_correctness, 0.0},
        {"mask-coverage", criterion_mask_coverage, 0.0},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string failure;
        try {
            criterion.fn();
        } catch (const std::exception& e) {
            failure = e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (failure.empty() && criterion.budget_seconds > 0.0 &&
            seconds > criterion.budget_seconds) {
            failure = "exceeded time budget of " + std::to_string(criterion.budget_seconds) + "s";
        }
        if (failure.empty()) {
            std::printf("[PASS] %-26s (%.2fs)\n", criterion.name.c_str(), seconds);
        } else {
            std::printf("[FAIL] %-26s (%.2fs): %s\n", criterion.name.c_str(), seconds,
                        failure.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu acceptance criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
}
