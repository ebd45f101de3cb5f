#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/corpus.hpp"
#include "forge/io.hpp"
#include "forge/rng.hpp"
#include "forge/tokenizer.hpp"
#include "forge/triplet.hpp"

namespace forge {

using EmbedFn = std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

// Cosine similarity clamped to [-1, 1]; zero-norm inputs map to 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SimilarityReport {
    std::size_t sample_size = 300;
    std::size_t repeats = 30;
    std::size_t effective_sample_size = 0;
    bool reduced_power = false; // fewer queries than sample_size
    std::vector<double> similarities;
    double mean = 0.0;
    double median = 0.0;
    double p90 = 0.0;

    Json to_json(bool include_values = false) const;
};

// Per repeat: sample min(sample_size, |queries|) queries without
// replacement, embed them, record all pairwise cosines; aggregate across
// repeats. Lower similarity means a more diverse query set.
SimilarityReport similarity_report(const std::vector<std::string>& queries, const EmbedFn& embed,
                                   std::size_t sample_size, std::size_t repeats, Rng& rng);

struct CostReport {
    std::size_t instruction_count = 0;
    double mean_context_tokens = 0.0;
    double mean_total_tokens = 0.0;
    std::size_t bucket_width = 1024;
    // bucket lower bound (in tokens) -> count; counts sum to instruction_count
    std::vector<std::pair<std::size_t, std::size_t>> histogram;

    Json to_json() const;
};

// Token cost per instruction: context = the rendered document region only,
// total = context + query + response.
CostReport cost_report(const std::vector<InstructionTriplet>& triplets, const CorpusStore& store,
                       const TokenizerHandle& tokenizer, std::size_t bucket_width = 1024);

struct RewardHistogram {
    double min_score = 0.0;
    double bucket_width = 0.0;
    std::vector<std::size_t> counts;
    std::vector<double> proportions; // sum to 1 within 1e-9

    Json to_json() const;
};

RewardHistogram reward_histogram(const std::vector<double>& scores, double bucket_width);

// TSV `id<TAB>v1,v2,...`, one line per query, for external projection tools.
void export_embeddings(const std::vector<std::pair<std::string, std::string>>& id_and_text,
                       const EmbedFn& embed, const std::filesystem::path& path);

std::vector<double> read_scores(const std::filesystem::path& path); // JSONL {id, score}

} // namespace forge
