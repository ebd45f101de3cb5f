#include "forge/analysis.hpp"

#include "forge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace forge {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        raise(Errc::DimensionMismatch, "cosine over vectors of different dimensionality");
    }
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    double denom = std::sqrt(norm_a) * std::sqrt(norm_b);
    if (denom == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / denom, -1.0, 1.0);
}

namespace {

double percentile(std::vector<double> values, double quantile) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    std::size_t rank =
        static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(values.size())));
    if (rank == 0) {
        rank = 1;
    }
    return values[rank - 1];
}

} // namespace

SimilarityReport similarity_report(const std::vector<std::string>& queries, const EmbedFn& embed,
                                   std::size_t sample_size, std::size_t repeats, Rng& rng) {
    if (queries.size() < 2) {
        raise(Errc::TooFewQueries, "similarity report needs at least 2 queries, got " +
                                       std::to_string(queries.size()));
    }
    if (sample_size < 2) {
        raise(Errc::TooFewQueries, "sample_size must be >= 2");
    }

    SimilarityReport report;
    report.sample_size = sample_size;
    report.repeats = repeats;
    report.effective_sample_size = std::min(sample_size, queries.size());
    report.reduced_power = report.effective_sample_size < sample_size;

    const std::size_t m = report.effective_sample_size;
    report.similarities.reserve(repeats * m * (m - 1) / 2);

    std::vector<std::size_t> indices(queries.size());
    std::iota(indices.begin(), indices.end(), 0);

    for (std::size_t repeat = 0; repeat < repeats; ++repeat) {
        // partial Fisher-Yates, without replacement within the repeat
        for (std::size_t t = 0; t < m; ++t) {
            std::size_t j = t + static_cast<std::size_t>(uniform_below(rng, indices.size() - t));
            std::swap(indices[t], indices[j]);
        }
        std::vector<std::string> sampled;
        sampled.reserve(m);
        for (std::size_t t = 0; t < m; ++t) {
            sampled.push_back(queries[indices[t]]);
        }
        auto vectors = embed(sampled);
        if (vectors.size() != sampled.size()) {
            raise(Errc::DimensionMismatch, "embedder returned wrong batch size");
        }
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            for (std::size_t j = i + 1; j < vectors.size(); ++j) {
                report.similarities.push_back(cosine_similarity(vectors[i], vectors[j]));
            }
        }
    }

    double sum = std::accumulate(report.similarities.begin(), report.similarities.end(), 0.0);
    report.mean = report.similarities.empty()
                      ? 0.0
                      : sum / static_cast<double>(report.similarities.size());
    report.median = percentile(report.similarities, 0.50);
    report.p90 = percentile(report.similarities, 0.90);
    return report;
}

Json SimilarityReport::to_json(bool include_values) const {
    Json value;
    value["sample_size"] = sample_size;
    value["repeats"] = repeats;
    value["effective_sample_size"] = effective_sample_size;
    value["reduced_power"] = reduced_power;
    value["pair_count"] = similarities.size();
    value["mean"] = mean;
    value["median"] = median;
    value["p90"] = p90;
    if (include_values) {
        value["similarities"] = similarities;
    }
    return value;
}

CostReport cost_report(const std::vector<InstructionTriplet>& triplets, const CorpusStore& store,
                       const TokenizerHandle& tokenizer, std::size_t bucket_width) {
    if (triplets.empty()) {
        raise(Errc::EmptyDataset, "cost report over an empty triplet stream");
    }
    if (bucket_width == 0) {
        raise(Errc::Config, "bucket_width must be positive");
    }

    CostReport report;
    report.instruction_count = triplets.size();
    report.bucket_width = bucket_width;

    std::map<std::size_t, std::size_t> buckets;
    double context_sum = 0.0;
    double total_sum = 0.0;
    for (const auto& triplet : triplets) {
        std::string context_text;
        for (std::size_t i = 0; i < triplet.context.doc_ids.size(); ++i) {
            if (i > 0) {
                context_text += triplet.context.separator;
            }
            context_text += store.by_id(triplet.context.doc_ids[i]).text;
        }
        std::size_t context_tokens = tokenizer.count(context_text);
        std::size_t total_tokens =
            context_tokens + tokenizer.count(triplet.query) + tokenizer.count(triplet.response);
        context_sum += static_cast<double>(context_tokens);
        total_sum += static_cast<double>(total_tokens);
        buckets[(total_tokens / bucket_width) * bucket_width] += 1;
    }
    report.mean_context_tokens = context_sum / static_cast<double>(triplets.size());
    report.mean_total_tokens = total_sum / static_cast<double>(triplets.size());
    report.histogram.assign(buckets.begin(), buckets.end());
    return report;
}

Json CostReport::to_json() const {
    Json value;
    value["instruction_count"] = instruction_count;
    value["mean_context_tokens"] = mean_context_tokens;
    value["mean_total_tokens"] = mean_total_tokens;
    value["bucket_width"] = bucket_width;
    Json hist = Json::array();
    for (const auto& [lower, count] : histogram) {
        Json bucket;
        bucket["lower"] = lower;
        bucket["count"] = count;
        hist.push_back(std::move(bucket));
    }
    value["histogram"] = std::move(hist);
    return value;
}

RewardHistogram reward_histogram(const std::vector<double>& scores, double bucket_width) {
    if (scores.empty()) {
        raise(Errc::EmptyScores, "reward histogram over an empty score list");
    }
    if (!(bucket_width > 0.0)) {
        raise(Errc::Config, "bucket_width must be > 0");
    }
    auto [min_it, max_it] = std::minmax_element(scores.begin(), scores.end());
    RewardHistogram hist;
    hist.min_score = *min_it;
    hist.bucket_width = bucket_width;
    std::size_t bucket_count =
        static_cast<std::size_t>(std::floor((*max_it - *min_it) / bucket_width)) + 1;
    hist.counts.assign(bucket_count, 0);
    for (double score : scores) {
        std::size_t index = static_cast<std::size_t>(std::floor((score - *min_it) / bucket_width));
        if (index >= bucket_count) {
            index = bucket_count - 1; // fp edge at the max
        }
        hist.counts[index] += 1;
    }
    hist.proportions.reserve(bucket_count);
    for (std::size_t count : hist.counts) {
        hist.proportions.push_back(static_cast<double>(count) / static_cast<double>(scores.size()));
    }
    return hist;
}

Json RewardHistogram::to_json() const {
    Json value;
    value["min_score"] = min_score;
    value["bucket_width"] = bucket_width;
    Json buckets = Json::array();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        Json bucket;
        bucket["lower"] = min_score + static_cast<double>(i) * bucket_width;
        bucket["count"] = counts[i];
        bucket["proportion"] = proportions[i];
        buckets.push_back(std::move(bucket));
    }
    value["buckets"] = std::move(buckets);
    return value;
}

void export_embeddings(const std::vector<std::pair<std::string, std::string>>& id_and_text,
                       const EmbedFn& embed, const std::filesystem::path& path) {
    if (id_and_text.empty()) {
        raise(Errc::EmptyDataset, "no queries to export");
    }
    std::vector<std::string> texts;
    texts.reserve(id_and_text.size());
    for (const auto& [id, text] : id_and_text) {
        texts.push_back(text);
    }
    auto vectors = embed(texts);
    if (vectors.size() != texts.size()) {
        raise(Errc::DimensionMismatch, "embedder returned wrong batch size");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        raise(Errc::Io, "cannot open " + path.string() + " for writing");
    }
    std::ostringstream line;
    line.precision(17);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        line.str("");
        line << id_and_text[i].first << '\t';
        for (std::size_t d = 0; d < vectors[i].size(); ++d) {
            if (d > 0) {
                line << ',';
            }
            line << vectors[i][d];
        }
        out << line.str() << '\n';
    }
    if (!out) {
        raise(Errc::Io, "write failed: " + path.string());
    }
}

std::vector<double> read_scores(const std::filesystem::path& path) {
    std::vector<double> scores;
    for_each_jsonl_record(path, [&](Json record, std::size_t line_number) {
        if (!record.contains("score") || !record["score"].is_number()) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_number << ": record missing numeric field 'score'";
            raise(Errc::MalformedRecord, msg.str());
        }
        scores.push_back(record["score"].get<double>());
    });
    return scores;
}

} // namespace forge
