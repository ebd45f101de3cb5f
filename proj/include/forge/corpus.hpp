#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "forge/rng.hpp"
#include "forge/tokenizer.hpp"

namespace forge {

struct Document {
    std::string id;
    std::string text;
    std::string source;
    std::size_t char_count = 0; // Unicode scalars, not bytes
    std::optional<std::size_t> token_count;
};

// Immutable after load; iteration follows insertion order. Safe for
// concurrent reads, RNGs are caller-owned.
class CorpusStore {
public:
    void add(Document doc); // throws DuplicateId / MalformedRecord

    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }

    const Document& at(std::size_t pos) const { return docs_.at(pos); }
    Document& at(std::size_t pos) { return docs_.at(pos); }

    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    std::optional<std::size_t> position_of(const std::string& id) const;
    const Document& by_id(const std::string& id) const; // throws InsufficientDocuments

    auto begin() const { return docs_.begin(); }
    auto end() const { return docs_.end(); }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { Jsonl, PlainDir };

CorpusFormat corpus_format_from_string(const std::string& name);

// JSONL: one object per line, required `text`, optional `id` and `source`;
// missing ids become the zero-based record index. PlainDir: one document per
// regular file in lexicographic filename order, id = filename.
CorpusStore load_corpus(const std::filesystem::path& path, CorpusFormat format);

void write_corpus(const CorpusStore& store, const std::filesystem::path& path);

// Uniform sample of k distinct documents, never returning excluded ids.
// Deterministic given (store, k, exclude, rng state): draws k indices into
// the shrinking candidate pool via uniform_below, partial Fisher-Yates.
std::vector<Document> sample_documents(const CorpusStore& store, std::size_t k,
                                       const std::unordered_set<std::string>& exclude, Rng& rng);

struct CorpusStats {
    std::size_t doc_count = 0;
    double mean_token_count = 0.0;
    double mean_char_count = 0.0;
    std::size_t p50_token_count = 0;
    std::size_t p90_token_count = 0;
    std::size_t p99_token_count = 0;
};

// Exact means over all documents; token counts are computed once and cached
// on the documents (call before spawning readers).
CorpusStats corpus_stats(CorpusStore& store, const TokenizerHandle& tokenizer);

} // namespace forge
