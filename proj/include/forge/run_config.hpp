#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "forge/chat_template.hpp"
#include "forge/client.hpp"
#include "forge/corpus.hpp"
#include "forge/mock_client.hpp"
#include "forge/packer.hpp"
#include "forge/synthesis.hpp"
#include "forge/tokenizer.hpp"

namespace forge {

struct TokenizerSpec {
    std::string kind = "chars"; // chars | words | approx | vocab
    std::string vocab_path;

    TokenizerHandle resolve() const;
};

// One JSON config drives every command; CLI flags override individual
// fields. All randomness flows from `seed`.
struct RunConfig {
    std::string corpus_path;
    CorpusFormat corpus_format = CorpusFormat::Jsonl;

    std::string template_spec = "llama3"; // builtin name or path to a .json
    ChatTemplate tmpl;                    // resolved

    ClientConfig client;
    std::optional<MockConfig> mock; // set => offline deterministic backend
    std::string mock_spec;          // "hash" or a mapping-file path

    SamplingParams elicit;
    SamplingParams respond;
    bool sampling_overridden = false; // config supplied explicit params

    std::size_t multidoc_n = 10;
    std::size_t queries_per_doc = 1;
    bool elicit_on_multidoc = false;

    PMixConfig pmix;
    bool pmix_sep_set = false; // sep defaults to template end_of_turn

    TokenizerSpec tokenizer;

    std::uint64_t seed = 0;
    std::size_t limit = 0;
    int workers = 4;

    std::string out_triplets = "triplets.jsonl";
    std::string out_report = "run_report.json";

    static RunConfig from_json(const Json& value);
    static RunConfig from_file(const std::filesystem::path& path);

    // Resolves template, sampling defaults and pmix.sep; call after overrides.
    void finalize();

    // Fails with Errc::Config naming the first offending field.
    void validate_for_synthesis() const;

    std::unique_ptr<Client> make_client() const;

    Json resolved_json() const; // api_key redacted
};

PipelineConfig pipeline_config_from(const RunConfig& config);

} // namespace forge
