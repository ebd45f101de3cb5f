#include "forge/corpus.hpp"

#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace forge {

void CorpusStore::add(Document doc) {
    if (doc.text.empty()) {
        raise(Errc::MalformedRecord, "document '" + doc.id + "' has empty text");
    }
    if (index_.count(doc.id)) {
        raise(Errc::DuplicateId, "duplicate document id '" + doc.id + "'");
    }
    doc.char_count = utf8_scalar_count(doc.text);
    index_.emplace(doc.id, docs_.size());
    docs_.push_back(std::move(doc));
}

std::optional<std::size_t> CorpusStore::position_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Document& CorpusStore::by_id(const std::string& id) const {
    auto pos = position_of(id);
    if (!pos) {
        raise(Errc::InsufficientDocuments, "unknown document id '" + id + "'");
    }
    return docs_[*pos];
}

CorpusFormat corpus_format_from_string(const std::string& name) {
    if (name == "jsonl") {
        return CorpusFormat::Jsonl;
    }
    if (name == "plain-dir") {
        return CorpusFormat::PlainDir;
    }
    raise(Errc::Config, "unknown corpus format '" + name + "' (expected jsonl or plain-dir)");
}

namespace {

CorpusStore load_jsonl(const std::filesystem::path& path) {
    CorpusStore store;
    std::size_t record_index = 0;
    for_each_jsonl_record(path, [&](Json record, std::size_t line_number) {
        if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_number << ": record missing string field 'text'";
            raise(Errc::MalformedRecord, msg.str());
        }
        Document doc;
        doc.text = record["text"].get<std::string>();
        if (record.contains("id") && record["id"].is_string()) {
            doc.id = record["id"].get<std::string>();
        } else {
            doc.id = std::to_string(record_index);
        }
        if (record.contains("source") && record["source"].is_string()) {
            doc.source = record["source"].get<std::string>();
        }
        store.add(std::move(doc));
        ++record_index;
    });
    if (store.empty()) {
        std::cerr << "warning: corpus " << path.string() << " contains no documents\n";
    }
    return store;
}

CorpusStore load_plain_dir(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_directory(path, ec)) {
        raise(Errc::Io, "not a readable directory: " + path.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().filename().string().front() != '.') {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    CorpusStore store;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) {
            raise(Errc::Io, "cannot open " + file.string());
        }
        std::ostringstream content;
        content << in.rdbuf();
        Document doc;
        doc.id = file.filename().string();
        doc.text = content.str();
        doc.source = file.string();
        if (doc.text.empty()) {
            std::cerr << "warning: skipping empty file " << file.string() << "\n";
            continue;
        }
        store.add(std::move(doc));
    }
    if (store.empty()) {
        std::cerr << "warning: corpus " << path.string() << " contains no documents\n";
    }
    return store;
}

} // namespace

CorpusStore load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    switch (format) {
    case CorpusFormat::Jsonl:
        return load_jsonl(path);
    case CorpusFormat::PlainDir:
        return load_plain_dir(path);
    }
    raise(Errc::Config, "invalid corpus format");
}

void write_corpus(const CorpusStore& store, const std::filesystem::path& path) {
    JsonlWriter writer(path);
    for (const auto& doc : store) {
        Json record;
        record["id"] = doc.id;
        record["text"] = doc.text;
        if (!doc.source.empty()) {
            record["source"] = doc.source;
        }
        writer.write(record);
    }
}

std::vector<Document> sample_documents(const CorpusStore& store, std::size_t k,
                                       const std::unordered_set<std::string>& exclude, Rng& rng) {
    std::vector<std::size_t> pool;
    pool.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (!exclude.count(store.at(i).id)) {
            pool.push_back(i);
        }
    }
    if (k > pool.size()) {
        std::ostringstream msg;
        msg << "requested " << k << " documents but only " << pool.size() << " are available after exclusion";
        raise(Errc::InsufficientDocuments, msg.str());
    }
    std::vector<Document> out;
    out.reserve(k);
    for (std::size_t t = 0; t < k; ++t) {
        std::size_t j = t + static_cast<std::size_t>(uniform_below(rng, pool.size() - t));
        std::swap(pool[t], pool[j]);
        out.push_back(store.at(pool[t]));
    }
    return out;
}

namespace {

std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double quantile) {
    std::size_t rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(sorted.size())));
    if (rank == 0) {
        rank = 1;
    }
    return sorted[rank - 1];
}

} // namespace

CorpusStats corpus_stats(CorpusStore& store, const TokenizerHandle& tokenizer) {
    if (store.empty()) {
        raise(Errc::EmptyCorpus, "corpus_stats requires a non-empty store");
    }
    std::vector<std::size_t> token_counts;
    token_counts.reserve(store.size());
    double token_sum = 0.0;
    double char_sum = 0.0;
    for (std::size_t i = 0; i < store.size(); ++i) {
        Document& doc = store.at(i);
        if (!doc.token_count) {
            doc.token_count = tokenizer.count(doc.text);
        }
        token_counts.push_back(*doc.token_count);
        token_sum += static_cast<double>(*doc.token_count);
        char_sum += static_cast<double>(doc.char_count);
    }
    std::sort(token_counts.begin(), token_counts.end());

    CorpusStats stats;
    stats.doc_count = store.size();
    stats.mean_token_count = token_sum / static_cast<double>(store.size());
    stats.mean_char_count = char_sum / static_cast<double>(store.size());
    stats.p50_token_count = nearest_rank(token_counts, 0.50);
    stats.p90_token_count = nearest_rank(token_counts, 0.90);
    stats.p99_token_count = nearest_rank(token_counts, 0.99);
    return stats;
}

} // namespace forge
