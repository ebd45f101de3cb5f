#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "forge/io.hpp"
#include "forge/rng.hpp"
#include "forge/tokenizer.hpp"

namespace forge {

enum class SampleKind { Short, Long };

const char* sample_kind_name(SampleKind kind);

struct PMixConfig {
    std::size_t short_prefix_count = 1; // N_S
    double long_prob = 0.4;             // P_L
    std::size_t max_tokens = 65536;     // L_max
    std::string sep;

    void validate() const;
};

struct FormattedSample {
    std::string text;
    std::size_t token_len = 0; // tokenizer.count(text)
    SampleKind kind = SampleKind::Short;
    std::string origin_id;
};

FormattedSample make_formatted_sample(std::string text, SampleKind kind, std::string origin_id,
                                      const TokenizerHandle& tokenizer);

struct Segment {
    std::size_t token_offset = 0;
    std::size_t token_len = 0;
    SampleKind kind = SampleKind::Short;
    std::string origin_id;
};

struct PackedSequence {
    std::string text;
    std::size_t total_tokens = 0; // recount of the final text, <= L_max
    std::vector<Segment> segments;
};

struct ConstructStats {
    std::size_t bernoulli_draws = 0;
    std::size_t long_branch_draws = 0;
    bool rollback_truncated = false; // non-additive recount exceeded L_max
};

// One mixed-context training sequence:
//
//   1. Pre-pend N_S short samples joined by sep (the single-s0 case
//      generalized; N_S=0 starts directly with the loop). If the pool runs
//      out or a sample does not fit, the sequence ends here so the Short
//      prefix stays intact.
//   2. While current_length < L_max: draw u ~ U(0,1); pick a long sample if
//      u < P_L, else a short one; append "sep + sample" if
//      current_length + count(sep) + sample.token_len <= L_max, otherwise
//      BREAK immediately — the other kind is never substituted.
//
// current_length is re-counted on the rendered text after every append
// (token counts are not additive across concatenation); in the rare case a
// recount overshoots L_max the append is rolled back and the loop breaks.
//
// RNG stream contract (replayed verbatim by test oracles):
//   - every pool draw is uniform_below(rng, remaining) giving the position
//     in the remaining pool, kept in original order; the drawn element is
//     removed (sampling without replacement within one sequence);
//   - each loop iteration first draws u = uniform_real(rng), then (if the
//     chosen pool is non-empty) the pool position. An exhausted chosen pool
//     breaks the loop after the Bernoulli draw.
//
// Segment offsets are the additive ledger (previous offset + previous
// length + sep tokens); they equal true token positions whenever the
// deployment tokenizer does not merge across sep boundaries, which chat
// end-of-turn separators guarantee in practice.
//
// Errors: EmptyPool (N_S >= 1 with an empty short pool), NoFit (the first
// pre-pended sample alone exceeds L_max).
PackedSequence construct_hybrid_sample(std::span<const FormattedSample> short_pool,
                                       std::span<const FormattedSample> long_pool,
                                       const PMixConfig& config, const TokenizerHandle& tokenizer,
                                       Rng& rng, ConstructStats* stats = nullptr);

struct PackReport {
    std::size_t sequences = 0;
    double mean_fill_ratio = 0.0;
    std::size_t short_segments = 0;
    std::size_t long_segments = 0;
    std::size_t bernoulli_draws = 0;
    std::size_t long_branch_draws = 0;
    std::size_t skipped_oversized = 0;
    std::size_t rollback_truncations = 0;

    double long_branch_frequency() const {
        return bernoulli_draws == 0
                   ? 0.0
                   : static_cast<double>(long_branch_draws) / static_cast<double>(bernoulli_draws);
    }

    Json to_json() const;
};

// `count` independently constructed sequences. Within a sequence sampling is
// without replacement; across sequences pools reset (with replacement).
// Sequence i uses an RNG seeded with derive_seed(seed, "pack", i), so
// construction order can never change the output. Oversized pool samples
// (token_len > L_max) are skipped up front with a warning.
void pack_dataset(std::span<const FormattedSample> short_pool,
                  std::span<const FormattedSample> long_pool, const PMixConfig& config,
                  const TokenizerHandle& tokenizer, std::uint64_t seed, std::size_t count,
                  const std::function<void(const PackedSequence&)>& sink,
                  PackReport* report = nullptr);

std::vector<PackedSequence> pack_dataset_vec(std::span<const FormattedSample> short_pool,
                                             std::span<const FormattedSample> long_pool,
                                             const PMixConfig& config,
                                             const TokenizerHandle& tokenizer, std::uint64_t seed,
                                             std::size_t count, PackReport* report = nullptr);

struct MaskSpan {
    std::size_t begin = 0;
    std::size_t end = 0; // half-open
};

// Attention boundaries for document masking: one span per segment, each
// separator charged to the segment before it; positions in different spans
// must not attend to each other.
std::vector<MaskSpan> emit_masks(const PackedSequence& seq);

Json packed_to_json(const PackedSequence& seq);

} // namespace forge
