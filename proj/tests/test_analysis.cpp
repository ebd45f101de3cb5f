#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "forge/analysis.hpp"
#include "forge/error.hpp"
#include "forge/mock_client.hpp"
#include "test_util.hpp"

using namespace forge;

namespace {

// embedder returning fixed vectors keyed by input text
EmbedFn stub_embedder(std::map<std::string, std::vector<double>> table) {
    return [table = std::move(table)](const std::vector<std::string>& texts) {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            out.push_back(table.at(text));
        }
        return out;
    };
}

EmbedFn hash_embedder(std::size_t dim = 16) {
    return [dim](const std::vector<std::string>& texts) {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            out.push_back(hash_unit_vector(text, dim));
        }
        return out;
    };
}

} // namespace

TEST_CASE("cosine similarity basics") {
    std::vector<double> a = {1.0, 0.0};
    std::vector<double> b = {0.0, 1.0};
    std::vector<double> c = {2.0, 0.0};
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, c) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
    std::vector<double> zero = {0.0, 0.0};
    CHECK(cosine_similarity(a, zero) == 0.0);
}

TEST_CASE("cosine symmetry and self-similarity over random unit vectors") {
    for (int i = 0; i < 200; ++i) {
        auto a = hash_unit_vector("a" + std::to_string(i), 24);
        auto b = hash_unit_vector("b" + std::to_string(i), 24);
        double ab = cosine_similarity(a, b);
        double ba = cosine_similarity(b, a);
        CHECK(std::abs(ab - ba) < 1e-12);
        CHECK(std::abs(cosine_similarity(a, a) - 1.0) < 1e-9);
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("similarity_report on two identical embeddings gives 1.0") {
    auto embed = stub_embedder({{"q1", {0.6, 0.8}}, {"q2", {0.6, 0.8}}});
    Rng rng(1);
    SimilarityReport report = similarity_report({"q1", "q2"}, embed, 2, 1, rng);
    REQUIRE(report.similarities.size() == 1);
    CHECK(report.similarities[0] == doctest::Approx(1.0));
}

TEST_CASE("similarity_report on orthogonal embeddings gives 0.0") {
    auto embed = stub_embedder({{"q1", {1.0, 0.0}}, {"q2", {0.0, 1.0}}});
    Rng rng(1);
    SimilarityReport report = similarity_report({"q1", "q2"}, embed, 2, 1, rng);
    REQUIRE(report.similarities.size() == 1);
    CHECK(report.similarities[0] == doctest::Approx(0.0));
}

TEST_CASE("similarity_report mean matches a hand-computed pairwise oracle") {
    std::map<std::string, std::vector<double>> table = {
        {"a", {1.0, 0.0, 0.0}},
        {"b", {0.0, 1.0, 0.0}},
        {"c", {std::sqrt(0.5), std::sqrt(0.5), 0.0}},
    };
    auto embed = stub_embedder(table);
    Rng rng(1);
    SimilarityReport report = similarity_report({"a", "b", "c"}, embed, 3, 1, rng);
    REQUIRE(report.similarities.size() == 3);

    // direct dot-product arithmetic, independent of the report path
    double ab = 0.0;
    double ac = std::sqrt(0.5);
    double bc = std::sqrt(0.5);
    double expected_mean = (ab + ac + bc) / 3.0;
    CHECK(report.mean == doctest::Approx(expected_mean).epsilon(1e-9));
}

TEST_CASE("similarity_report has repeats x C(m,2) values and flags reduced power") {
    std::vector<std::string> queries;
    for (int i = 0; i < 40; ++i) {
        queries.push_back("query " + std::to_string(i));
    }
    Rng rng(3);

    SUBCASE("full sample size") {
        SimilarityReport report = similarity_report(queries, hash_embedder(), 10, 7, rng);
        CHECK(report.similarities.size() == 7 * (10 * 9) / 2);
        CHECK_FALSE(report.reduced_power);
        CHECK(report.effective_sample_size == 10);
    }

    SUBCASE("dataset smaller than sample size") {
        SimilarityReport report = similarity_report(queries, hash_embedder(), 300, 2, rng);
        CHECK(report.reduced_power);
        CHECK(report.effective_sample_size == 40);
        CHECK(report.similarities.size() == 2 * (40 * 39) / 2);
    }
}

TEST_CASE("similarity sampling is without replacement within a repeat") {
    std::vector<std::string> queries;
    for (int i = 0; i < 20; ++i) {
        queries.push_back("q" + std::to_string(i));
    }
    std::vector<std::set<std::string>> batches;
    EmbedFn spy = [&](const std::vector<std::string>& texts) {
        std::set<std::string> unique(texts.begin(), texts.end());
        CHECK(unique.size() == texts.size()); // no repeats inside one repeat
        batches.push_back(std::move(unique));
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) {
            out.push_back(hash_unit_vector(t, 8));
        }
        return out;
    };
    Rng rng(4);
    similarity_report(queries, spy, 8, 5, rng);
    CHECK(batches.size() == 5);
}

TEST_CASE("similarity_report determinism and error paths") {
    std::vector<std::string> queries = {"a?", "b?", "c?", "d?"};
    Rng rng_a(9);
    Rng rng_b(9);
    auto r1 = similarity_report(queries, hash_embedder(), 3, 4, rng_a);
    auto r2 = similarity_report(queries, hash_embedder(), 3, 4, rng_b);
    CHECK(r1.similarities == r2.similarities);

    Rng rng(1);
    CHECK_THROWS_AS(similarity_report({"only one"}, hash_embedder(), 2, 1, rng), Error);
    CHECK_THROWS_AS(similarity_report(queries, hash_embedder(), 1, 1, rng), Error);
}

namespace {

InstructionTriplet triplet_with(const std::string& gold, std::string query, std::string response) {
    InstructionTriplet t;
    t.id = gold;
    t.context.doc_ids = {gold};
    t.context.gold_index = 0;
    t.context.separator = "<S>";
    t.query = std::move(query);
    t.response = std::move(response);
    return t;
}

} // namespace

TEST_CASE("cost_report means are exact") {
    CorpusStore store = forge::test::make_store({
        {"a", std::string(1000, 'x')},
        {"b", std::string(1600, 'x')},
        {"c", std::string(2200, 'x')},
    });
    std::vector<InstructionTriplet> triplets = {
        triplet_with("a", "q?", "r"),
        triplet_with("b", "q?", "r"),
        triplet_with("c", "q?", "r"),
    };
    CostReport report = cost_report(triplets, store, char_tokenizer(), 512);
    CHECK(report.instruction_count == 3);
    CHECK(report.mean_context_tokens == doctest::Approx(1600.0));
    CHECK(report.mean_total_tokens == doctest::Approx(1603.0));

    std::size_t histogram_total = 0;
    for (const auto& [lower, count] : report.histogram) {
        histogram_total += count;
    }
    CHECK(histogram_total == report.instruction_count);
}

TEST_CASE("cost_report single triplet mean equals its own count") {
    CorpusStore store = forge::test::make_store({{"a", "0123456789"}});
    std::vector<InstructionTriplet> triplets = {triplet_with("a", "why?", "ok")};
    CostReport report = cost_report(triplets, store, char_tokenizer(), 1024);
    CHECK(report.instruction_count == 1);
    CHECK(report.mean_context_tokens == doctest::Approx(10.0));
    CHECK(report.mean_total_tokens == doctest::Approx(16.0));
}

TEST_CASE("cost_report agrees exactly with an independent single-pass oracle") {
    CorpusStore store = forge::test::make_synthetic_store(25);
    TokenizerHandle tok = word_tokenizer();
    std::vector<InstructionTriplet> triplets;
    Rng rng(6);
    for (int i = 0; i < 25; ++i) {
        InstructionTriplet t = triplet_with(store.at(uniform_below(rng, 25)).id,
                                            "what about item " + std::to_string(i) + "?",
                                            "answer body " + std::to_string(i * 3));
        if (i % 3 == 0) { // some multi-doc layouts
            t.context.doc_ids.push_back(store.at(uniform_below(rng, 25)).id);
            if (t.context.doc_ids[1] == t.context.doc_ids[0]) {
                t.context.doc_ids.pop_back();
            }
        }
        triplets.push_back(std::move(t));
    }

    CostReport report = cost_report(triplets, store, tok, 64);

    // independent single pass
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
        context_sum += static_cast<double>(tok.count(ctx));
        total_sum += static_cast<double>(tok.count(ctx) + tok.count(t.query) + tok.count(t.response));
    }
    double n = static_cast<double>(triplets.size());
    CHECK(report.mean_context_tokens == context_sum / n);
    CHECK(report.mean_total_tokens == total_sum / n);
}

TEST_CASE("cost_report rejects an empty stream") {
    CorpusStore store;
    try {
        cost_report({}, store, char_tokenizer(), 64);
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyDataset);
    }
}

TEST_CASE("reward_histogram puts {1,1,2} with width 1 into 2/3 and 1/3 buckets") {
    RewardHistogram hist = reward_histogram({1.0, 1.0, 2.0}, 1.0);
    REQUIRE(hist.counts.size() == 2);
    CHECK(hist.min_score == doctest::Approx(1.0));
    CHECK(hist.counts[0] == 2);
    CHECK(hist.counts[1] == 1);
    CHECK(hist.proportions[0] == doctest::Approx(2.0 / 3.0));
    CHECK(hist.proportions[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("reward_histogram single score gives one full bucket") {
    RewardHistogram hist = reward_histogram({4.25}, 0.5);
    REQUIRE(hist.counts.size() == 1);
    CHECK(hist.proportions[0] == doctest::Approx(1.0));
}

TEST_CASE("reward_histogram proportions sum to 1") {
    Rng rng(8);
    std::vector<double> scores;
    for (int i = 0; i < 5000; ++i) {
        scores.push_back(uniform_real(rng) * 10.0 - 5.0);
    }
    RewardHistogram hist = reward_histogram(scores, 0.75);
    double sum = 0.0;
    for (double p : hist.proportions) {
        sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("reward_histogram of uniform scores is near-uniform over interior buckets") {
    Rng rng(12);
    std::vector<double> scores;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        scores.push_back(uniform_real(rng)); // [0,1)
    }
    RewardHistogram hist = reward_histogram(scores, 0.1);
    // ~10 buckets of p=0.1; binomial 5-sigma bound
    double sigma = std::sqrt(0.1 * 0.9 / static_cast<double>(n));
    for (std::size_t i = 0; i + 1 < hist.proportions.size(); ++i) {
        CHECK(std::abs(hist.proportions[i] - 0.1) < 5.0 * sigma + 1e-3);
    }
}

TEST_CASE("reward_histogram error paths") {
    try {
        reward_histogram({}, 1.0);
        FAIL("expected EmptyScores");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::EmptyScores);
    }
    CHECK_THROWS_AS(reward_histogram({1.0}, 0.0), Error);
}

TEST_CASE("export_embeddings writes one dim-consistent line per query") {
    forge::test::TempDir dir;
    auto path = dir.file("embeddings.tsv");
    std::vector<std::pair<std::string, std::string>> queries;
    for (int i = 0; i < 5; ++i) {
        queries.emplace_back("id" + std::to_string(i), "query " + std::to_string(i) + "?");
    }
    export_embeddings(queries, hash_embedder(8), path);

    std::string content = forge::test::read_text_file(path);
    std::istringstream lines(content);
    std::string line;
    std::size_t line_count = 0;
    std::size_t dims = 0;
    while (std::getline(lines, line)) {
        ++line_count;
        auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        std::size_t commas = 0;
        for (char c : line.substr(tab + 1)) {
            commas += c == ',' ? 1 : 0;
        }
        if (dims == 0) {
            dims = commas + 1;
        }
        CHECK(commas + 1 == dims);
    }
    CHECK(line_count == 5);

    SUBCASE("rerun with the same embedder is byte-identical") {
        auto again = dir.file("embeddings2.tsv");
        export_embeddings(queries, hash_embedder(8), again);
        CHECK(forge::test::read_text_file(again) == content);
    }
}

TEST_CASE("export_embeddings line count equals query count for random inputs") {
    forge::test::TempDir dir;
    Rng rng(5);
    for (int round = 0; round < 20; ++round) {
        std::size_t n = 1 + uniform_below(rng, 50);
        std::vector<std::pair<std::string, std::string>> queries;
        for (std::size_t i = 0; i < n; ++i) {
            queries.emplace_back("id" + std::to_string(i), "text " + std::to_string(rng() % 1000));
        }
        auto path = dir.file("batch" + std::to_string(round) + ".tsv");
        export_embeddings(queries, hash_embedder(4), path);
        std::istringstream lines(forge::test::read_text_file(path));
        std::string line;
        std::size_t count = 0;
        while (std::getline(lines, line)) {
            ++count;
        }
        CHECK(count == n);
    }
}

TEST_CASE("read_scores parses JSONL score records") {
    forge::test::TempDir dir;
    auto path = dir.file("scores.jsonl");
    forge::test::write_text_file(path, "{\"id\":\"a\",\"score\":1.5}\n{\"id\":\"b\",\"score\":-2}\n");
    auto scores = read_scores(path);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0] == doctest::Approx(1.5));
    CHECK(scores[1] == doctest::Approx(-2.0));

    forge::test::write_text_file(path, "{\"id\":\"a\"}\n");
    CHECK_THROWS_AS(read_scores(path), Error);
}
