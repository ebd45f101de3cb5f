#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace forge {

// Pure token-counting handle. count("") == 0 and count is deterministic;
// counts are NOT assumed additive across concatenation, callers that need a
// bound on concatenated text must recount the rendered result.
struct TokenizerHandle {
    std::string name;
    std::function<std::size_t(std::string_view)> count;
    bool approximate = false;
};

// ceil(bytes / 4). Flagged approximate: smoke tests and rough budgeting only.
TokenizerHandle approx_tokenizer();

// One token per Unicode scalar. Exact and additive; the default for tests
// and offline packing without model assets.
TokenizerHandle char_tokenizer();

// One token per whitespace-delimited word.
TokenizerHandle word_tokenizer();

// Greedy longest-match subword tokenizer over a plain-text vocabulary file
// (one token per line, UTF-8). Bytes not covered by the vocabulary count as
// one token each.
TokenizerHandle vocab_tokenizer(const std::filesystem::path& vocab_path);

} // namespace forge
