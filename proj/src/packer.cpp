#include "forge/packer.hpp"

#include "forge/error.hpp"

#include <algorithm>
#include <iostream>

namespace forge {

const char* sample_kind_name(SampleKind kind) {
    return kind == SampleKind::Short ? "short" : "long";
}

void PMixConfig::validate() const {
    if (long_prob < 0.0 || long_prob > 1.0) {
        raise(Errc::Config, "pmix.long_prob must be in [0, 1]");
    }
    if (max_tokens == 0) {
        raise(Errc::Config, "pmix.max_tokens must be positive");
    }
}

FormattedSample make_formatted_sample(std::string text, SampleKind kind, std::string origin_id,
                                      const TokenizerHandle& tokenizer) {
    FormattedSample sample;
    sample.token_len = tokenizer.count(text);
    sample.text = std::move(text);
    sample.kind = kind;
    sample.origin_id = std::move(origin_id);
    return sample;
}

namespace {

// Remaining-pool view: stable order, draw removes by position.
class PoolDrawer {
public:
    explicit PoolDrawer(std::span<const FormattedSample> pool) : pool_(pool) {
        remaining_.reserve(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            remaining_.push_back(i);
        }
    }

    bool empty() const { return remaining_.empty(); }

    const FormattedSample& draw(Rng& rng) {
        std::size_t pos = static_cast<std::size_t>(uniform_below(rng, remaining_.size()));
        std::size_t index = remaining_[pos];
        remaining_.erase(remaining_.begin() + static_cast<std::ptrdiff_t>(pos));
        return pool_[index];
    }

private:
    std::span<const FormattedSample> pool_;
    std::vector<std::size_t> remaining_;
};

} // namespace

PackedSequence construct_hybrid_sample(std::span<const FormattedSample> short_pool,
                                       std::span<const FormattedSample> long_pool,
                                       const PMixConfig& config, const TokenizerHandle& tokenizer,
                                       Rng& rng, ConstructStats* stats) {
    config.validate();
    if (config.short_prefix_count >= 1 && short_pool.empty()) {
        raise(Errc::EmptyPool, "short pool is empty but N_S >= 1 requires short samples");
    }

    const std::size_t sep_tokens = tokenizer.count(config.sep);
    PoolDrawer shorts(short_pool);
    PoolDrawer longs(long_pool);

    PackedSequence seq;
    std::size_t current_length = 0;
    std::size_t ledger_offset = 0; // additive segment coordinate

    auto append = [&](const FormattedSample& sample) -> bool {
        const bool first = seq.segments.empty();
        const std::size_t cost = (first ? 0 : sep_tokens) + sample.token_len;
        if (!first && current_length + cost > config.max_tokens) {
            return false;
        }
        if (first && sample.token_len > config.max_tokens) {
            return false;
        }
        std::string appended = seq.text;
        if (!first) {
            appended += config.sep;
        }
        appended += sample.text;
        std::size_t recount = tokenizer.count(appended);
        if (recount > config.max_tokens) {
            // non-additive overshoot; keep the invariant, drop the append
            if (stats) {
                stats->rollback_truncated = true;
            }
            return false;
        }
        Segment segment;
        segment.token_offset = first ? 0 : ledger_offset + sep_tokens;
        segment.token_len = sample.token_len;
        segment.kind = sample.kind;
        segment.origin_id = sample.origin_id;
        ledger_offset = segment.token_offset + segment.token_len;
        seq.text = std::move(appended);
        current_length = recount;
        seq.segments.push_back(std::move(segment));
        return true;
    };

    // phase 1: N_S short samples up front; a pool too small to finish the
    // prefix ends the sequence just like an overflow would
    for (std::size_t i = 0; i < config.short_prefix_count; ++i) {
        if (shorts.empty()) {
            seq.total_tokens = current_length;
            return seq;
        }
        const FormattedSample& sample = shorts.draw(rng);
        if (i == 0 && sample.token_len > config.max_tokens) {
            raise(Errc::NoFit, "first short sample (" + std::to_string(sample.token_len) +
                                   " tokens) exceeds L_max=" + std::to_string(config.max_tokens));
        }
        if (!append(sample)) {
            seq.total_tokens = current_length;
            return seq;
        }
    }

    // phase 2: probabilistic mixing until the next sample would overflow
    while (current_length < config.max_tokens) {
        double u = uniform_real(rng);
        if (stats) {
            ++stats->bernoulli_draws;
        }
        const bool pick_long = u < config.long_prob;
        if (stats && pick_long) {
            ++stats->long_branch_draws;
        }
        PoolDrawer& pool = pick_long ? longs : shorts;
        if (pool.empty()) {
            break;
        }
        const FormattedSample& sample = pool.draw(rng);
        if (!append(sample)) {
            break;
        }
    }

    seq.total_tokens = current_length;
    return seq;
}

Json PackReport::to_json() const {
    Json value;
    value["sequences"] = sequences;
    value["mean_fill_ratio"] = mean_fill_ratio;
    value["short_segments"] = short_segments;
    value["long_segments"] = long_segments;
    value["bernoulli_draws"] = bernoulli_draws;
    value["long_branch_draws"] = long_branch_draws;
    value["long_branch_frequency"] = long_branch_frequency();
    value["skipped_oversized"] = skipped_oversized;
    value["rollback_truncations"] = rollback_truncations;
    return value;
}

namespace {

std::vector<FormattedSample> drop_oversized(std::span<const FormattedSample> pool,
                                            std::size_t max_tokens, std::size_t& skipped) {
    std::vector<FormattedSample> kept;
    kept.reserve(pool.size());
    for (const auto& sample : pool) {
        if (sample.token_len > max_tokens) {
            ++skipped;
            std::cerr << "warning: skipping oversized sample '" << sample.origin_id << "' ("
                      << sample.token_len << " > " << max_tokens << " tokens)\n";
        } else {
            kept.push_back(sample);
        }
    }
    return kept;
}

} // namespace

void pack_dataset(std::span<const FormattedSample> short_pool,
                  std::span<const FormattedSample> long_pool, const PMixConfig& config,
                  const TokenizerHandle& tokenizer, std::uint64_t seed, std::size_t count,
                  const std::function<void(const PackedSequence&)>& sink, PackReport* report) {
    config.validate();
    if (count < 1) {
        raise(Errc::Config, "pack count must be >= 1");
    }

    PackReport local;
    std::vector<FormattedSample> shorts = drop_oversized(short_pool, config.max_tokens, local.skipped_oversized);
    std::vector<FormattedSample> longs = drop_oversized(long_pool, config.max_tokens, local.skipped_oversized);

    double fill_sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "pack", i));
        ConstructStats stats;
        PackedSequence seq = construct_hybrid_sample(shorts, longs, config, tokenizer, rng, &stats);
        local.sequences += 1;
        local.bernoulli_draws += stats.bernoulli_draws;
        local.long_branch_draws += stats.long_branch_draws;
        local.rollback_truncations += stats.rollback_truncated ? 1 : 0;
        for (const auto& segment : seq.segments) {
            if (segment.kind == SampleKind::Short) {
                ++local.short_segments;
            } else {
                ++local.long_segments;
            }
        }
        fill_sum += static_cast<double>(seq.total_tokens) / static_cast<double>(config.max_tokens);
        sink(seq);
    }
    local.mean_fill_ratio = fill_sum / static_cast<double>(count);
    if (report) {
        *report = local;
    }
}

std::vector<PackedSequence> pack_dataset_vec(std::span<const FormattedSample> short_pool,
                                             std::span<const FormattedSample> long_pool,
                                             const PMixConfig& config,
                                             const TokenizerHandle& tokenizer, std::uint64_t seed,
                                             std::size_t count, PackReport* report) {
    std::vector<PackedSequence> out;
    out.reserve(count);
    pack_dataset(short_pool, long_pool, config, tokenizer, seed, count,
                 [&](const PackedSequence& seq) { out.push_back(seq); }, report);
    return out;
}

std::vector<MaskSpan> emit_masks(const PackedSequence& seq) {
    std::vector<MaskSpan> spans;
    spans.reserve(seq.segments.size());
    for (std::size_t i = 0; i < seq.segments.size(); ++i) {
        MaskSpan span;
        span.begin = seq.segments[i].token_offset;
        span.end = i + 1 < seq.segments.size() ? seq.segments[i + 1].token_offset : seq.total_tokens;
        spans.push_back(span);
    }
    return spans;
}

Json packed_to_json(const PackedSequence& seq) {
    Json segments = Json::array();
    for (const auto& segment : seq.segments) {
        Json s;
        s["offset"] = segment.token_offset;
        s["len"] = segment.token_len;
        s["kind"] = sample_kind_name(segment.kind);
        s["origin_id"] = segment.origin_id;
        segments.push_back(std::move(s));
    }
    Json record;
    record["text"] = seq.text;
    record["total_tokens"] = seq.total_tokens;
    record["segments"] = std::move(segments);
    return record;
}

} // namespace forge
