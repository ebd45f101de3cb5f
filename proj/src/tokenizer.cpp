#include "forge/tokenizer.hpp"

#include "forge/error.hpp"
#include "forge/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <unordered_set>

namespace forge {

TokenizerHandle approx_tokenizer() {
    return TokenizerHandle{
        "approx-bytes/4",
        [](std::string_view text) -> std::size_t { return (text.size() + 3) / 4; },
        true,
    };
}

TokenizerHandle char_tokenizer() {
    return TokenizerHandle{
        "chars",
        [](std::string_view text) -> std::size_t { return utf8_scalar_count(text); },
        false,
    };
}

TokenizerHandle word_tokenizer() {
    return TokenizerHandle{
        "words",
        [](std::string_view text) -> std::size_t {
            std::size_t n = 0;
            bool in_word = false;
            for (unsigned char c : text) {
                bool space = std::isspace(c) != 0;
                if (!space && !in_word) {
                    ++n;
                }
                in_word = !space;
            }
            return n;
        },
        false,
    };
}

namespace {

struct Vocab {
    std::unordered_set<std::string> tokens;
    std::size_t max_len = 0;
};

std::size_t greedy_count(const Vocab& vocab, std::string_view text) {
    std::size_t n = 0;
    std::size_t pos = 0;
    std::string probe;
    while (pos < text.size()) {
        std::size_t best = 0;
        std::size_t longest = std::min(vocab.max_len, text.size() - pos);
        for (std::size_t len = longest; len >= 1; --len) {
            probe.assign(text.substr(pos, len));
            if (vocab.tokens.count(probe)) {
                best = len;
                break;
            }
        }
        if (best == 0) {
            best = 1; // byte fallback
        }
        pos += best;
        ++n;
    }
    return n;
}

} // namespace

TokenizerHandle vocab_tokenizer(const std::filesystem::path& vocab_path) {
    std::ifstream in(vocab_path, std::ios::binary);
    if (!in) {
        raise(Errc::Io, "cannot open vocabulary file " + vocab_path.string());
    }
    auto vocab = std::make_shared<Vocab>();
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        vocab->max_len = std::max(vocab->max_len, line.size());
        vocab->tokens.insert(line);
    }
    if (vocab->tokens.empty()) {
        raise(Errc::Config, "vocabulary file is empty: " + vocab_path.string());
    }
    return TokenizerHandle{
        "vocab:" + vocab_path.filename().string(),
        [vocab](std::string_view text) -> std::size_t { return greedy_count(*vocab, text); },
        false,
    };
}

} // namespace forge
