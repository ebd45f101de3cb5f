#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "forge/corpus.hpp"
#include "forge/io.hpp"

namespace forge::test {

// Scratch directory wiped on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::ostringstream name;
        name << "forge-test-" << ::getpid() << "-" << counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() / name.str();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream content;
    content << in.rdbuf();
    return content.str();
}

inline CorpusStore make_store(const std::vector<std::pair<std::string, std::string>>& docs) {
    CorpusStore store;
    for (const auto& [id, text] : docs) {
        Document doc;
        doc.id = id;
        doc.text = text;
        store.add(std::move(doc));
    }
    return store;
}

// n documents "doc-0000".."doc-n" with mildly varied prose bodies.
inline CorpusStore make_synthetic_store(std::size_t n, std::size_t body_words = 24) {
    CorpusStore store;
    const char* topics[] = {"rivers",  "volcanoes", "photosynthesis", "telescopes", "glaciers",
                            "enzymes", "magnets",   "antibodies",     "asteroids",  "fungi"};
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "doc-%04zu", i);
        std::ostringstream text;
        text << "Article " << i << " is about " << topics[i % 10] << ".";
        for (std::size_t w = 0; w < body_words; ++w) {
            text << " Fact " << ((i * 37 + w * 11) % 991) << " concerns " << topics[(i + w) % 10]
                 << ".";
        }
        Document doc;
        doc.id = id;
        doc.text = text.str();
        store.add(std::move(doc));
    }
    return store;
}

// chi-square statistic against a uniform distribution over `bins`.
inline double chi_square_uniform(const std::vector<std::size_t>& counts) {
    std::size_t total = 0;
    for (auto c : counts) {
        total += c;
    }
    double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

// Upper critical values of the chi-square distribution at alpha = 0.01
// (standard table): df -> value.
inline double chi_square_critical_01(std::size_t df) {
    switch (df) {
    case 1: return 6.6349;
    case 2: return 9.2103;
    case 3: return 11.3449;
    case 4: return 13.2767;
    case 5: return 15.0863;
    case 9: return 21.6660;
    case 10: return 23.2093;
    default: break;
    }
    // Wilson-Hilferty approximation for other df
    double z = 2.326347874; // Phi^-1(0.99)
    double d = static_cast<double>(df);
    double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
    return d * t * t * t;
}

} // namespace forge::test
