// forge: synthesize document-grounded instruction data from a raw corpus,
// mix in distractor documents, and pack everything into length-budgeted
// training sequences. See README.md for the config schema.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "forge/analysis.hpp"
#include "forge/chat_template.hpp"
#include "forge/client.hpp"
#include "forge/corpus.hpp"
#include "forge/error.hpp"
#include "forge/http_client.hpp"
#include "forge/io.hpp"
#include "forge/mock_client.hpp"
#include "forge/packer.hpp"
#include "forge/run_config.hpp"
#include "forge/synthesis.hpp"
#include "forge/triplet.hpp"

namespace {

using namespace forge;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

int exit_code_for(const Error& error) {
    switch (error.code()) {
    case Errc::Config:
    case Errc::Io:
    case Errc::MalformedRecord:
    case Errc::DuplicateId:
    case Errc::UnknownFamily:
    case Errc::EmptyCorpus:
    case Errc::EmptyDataset:
    case Errc::EmptyScores:
    case Errc::TooFewQueries:
    case Errc::InsufficientDocuments:
        return kExitConfig;
    case Errc::Transport:
    case Errc::BackendRejected:
        return kExitBackend;
    default:
        return 1;
    }
}

struct CommonOverrides {
    std::string config_path;
    std::string corpus_path;
    std::string corpus_format;
    std::string template_spec;
    std::string mock_spec;
    std::optional<std::uint64_t> seed;
    std::string tokenizer_kind;
    std::string tokenizer_path;
};

RunConfig resolve_config(const CommonOverrides& common) {
    RunConfig config;
    if (!common.config_path.empty()) {
        config = RunConfig::from_file(common.config_path);
    }
    if (!common.corpus_path.empty()) {
        config.corpus_path = common.corpus_path;
    }
    if (!common.corpus_format.empty()) {
        config.corpus_format = corpus_format_from_string(common.corpus_format);
    }
    if (!common.template_spec.empty()) {
        config.template_spec = common.template_spec;
    }
    if (!common.mock_spec.empty()) {
        config.mock_spec = common.mock_spec;
        config.mock.reset();
    }
    if (common.seed) {
        config.seed = *common.seed;
    }
    if (!common.tokenizer_kind.empty()) {
        config.tokenizer.kind = common.tokenizer_kind;
    }
    if (!common.tokenizer_path.empty()) {
        config.tokenizer.vocab_path = common.tokenizer_path;
    }
    config.finalize();
    return config;
}

void add_common_options(CLI::App* cmd, CommonOverrides& common) {
    cmd->add_option("--config", common.config_path, "JSON run config; flags override its fields");
    cmd->add_option("--corpus", common.corpus_path, "corpus path (JSONL file or directory)");
    cmd->add_option("--format", common.corpus_format, "corpus format: jsonl | plain-dir");
    cmd->add_option("--template", common.template_spec, "builtin family (llama3|qwen25) or template .json");
    cmd->add_option("--mock", common.mock_spec,
                    "offline backend: 'hash' or a JSON mapping file (no network)");
    cmd->add_option("--seed", common.seed, "root seed; everything derives from it");
    cmd->add_option("--tokenizer", common.tokenizer_kind, "token counter: chars|words|approx|vocab");
    cmd->add_option("--tokenizer-vocab", common.tokenizer_path, "vocabulary file for --tokenizer vocab");
}

// ---------------------------------------------------------------- synthesize

int cmd_synthesize(const CommonOverrides& common, std::size_t limit_override, int workers_override,
                   std::size_t n_override, bool n_set, std::size_t queries_per_doc, bool qpd_set,
                   bool elicit_on_multidoc, const std::string& out_override,
                   const std::string& report_override, bool dry_run) {
    RunConfig config = resolve_config(common);
    if (limit_override > 0) {
        config.limit = limit_override;
    }
    if (workers_override > 0) {
        config.workers = workers_override;
    }
    if (n_set) {
        config.multidoc_n = n_override;
    }
    if (qpd_set) {
        config.queries_per_doc = queries_per_doc;
    }
    if (elicit_on_multidoc) {
        config.elicit_on_multidoc = true;
    }
    if (!out_override.empty()) {
        config.out_triplets = out_override;
    }
    if (!report_override.empty()) {
        config.out_report = report_override;
    }

    config.validate_for_synthesis();
    if (dry_run) {
        std::cout << config.resolved_json().dump(2) << "\n";
        return kExitOk;
    }

    CorpusStore store = load_corpus(config.corpus_path, config.corpus_format);
    std::unique_ptr<Client> client = config.make_client();

    JsonlWriter writer(config.out_triplets);
    RunReport report = run_pipeline(store, *client, pipeline_config_from(config),
                                    [&](const InstructionTriplet& triplet) {
                                        writer.write(triplet_to_json(triplet));
                                    });
    write_json_file(config.out_report, report.to_json());
    std::cerr << "synthesize: " << report.emitted << "/" << report.attempts
              << " triplets emitted -> " << config.out_triplets << "\n";
    if (report.backend_failures > 0 && report.emitted == 0) {
        std::cerr << "error: all attempts failed against the backend\n";
        return kExitBackend;
    }
    return kExitOk;
}

// -------------------------------------------------------------------- extend

int cmd_extend(const CommonOverrides& common, const std::string& triplets_path, std::size_t n,
               const std::string& out_path) {
    RunConfig config = resolve_config(common);
    if (config.corpus_path.empty()) {
        raise(Errc::Config, "corpus.path is required");
    }
    CorpusStore store = load_corpus(config.corpus_path, config.corpus_format);
    std::vector<InstructionTriplet> triplets = read_triplets(triplets_path);

    JsonlWriter writer(out_path);
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        InstructionTriplet base = triplets[i];
        // re-extension always starts over from the gold document
        const std::string gold = base.context.doc_ids.at(base.context.gold_index);
        base.context.doc_ids = {gold};
        base.context.gold_index = 0;
        Rng rng(derive_seed(config.seed, "extend", i));
        writer.write(triplet_to_json(extend_multidoc(base, store, n, rng)));
    }
    std::cerr << "extend: rewrote " << writer.records_written() << " layouts -> " << out_path << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------- pack

std::vector<FormattedSample> load_pool(const std::filesystem::path& path, SampleKind kind,
                                       const ChatTemplate& tmpl, const CorpusStore* store,
                                       const TokenizerHandle& tokenizer) {
    std::vector<FormattedSample> pool;
    std::size_t index = 0;
    for_each_jsonl_record(path, [&](Json record, std::size_t line_number) {
        std::string fallback_id =
            std::string(kind == SampleKind::Short ? "short-" : "long-") + std::to_string(index);
        std::string origin = record.value("id", fallback_id);
        std::string text;
        if (record.contains("text") && record["text"].is_string()) {
            text = record["text"].get<std::string>();
        } else if (record.contains("query") && record.contains("response")) {
            InstructionTriplet triplet;
            if (record.contains("context")) {
                triplet = triplet_from_json(record);
                if (!store) {
                    raise(Errc::Config,
                          "--corpus is required to render triplets with document context");
                }
                text = format_sample(tmpl, triplet, *store);
            } else {
                triplet.id = origin;
                triplet.query = record["query"].get<std::string>();
                triplet.response = record["response"].get<std::string>();
                CorpusStore empty;
                text = format_sample(tmpl, triplet, empty);
            }
        } else {
            raise(Errc::MalformedRecord, path.string() + ":" + std::to_string(line_number) +
                                             ": need 'text' or 'query'+'response'");
        }
        pool.push_back(make_formatted_sample(std::move(text), kind, std::move(origin), tokenizer));
        ++index;
    });
    return pool;
}

int cmd_pack(const CommonOverrides& common, const std::string& short_path,
             const std::string& long_path, std::size_t count, std::optional<double> long_prob,
             std::optional<std::size_t> n_short, std::optional<std::size_t> max_tokens,
             std::optional<std::string> sep, const std::string& out_path,
             const std::string& report_path) {
    RunConfig config = resolve_config(common);
    if (long_prob) {
        config.pmix.long_prob = *long_prob;
    }
    if (n_short) {
        config.pmix.short_prefix_count = *n_short;
    }
    if (max_tokens) {
        config.pmix.max_tokens = *max_tokens;
    }
    if (sep) {
        config.pmix.sep = *sep;
    }
    config.pmix.validate();

    TokenizerHandle tokenizer = config.tokenizer.resolve();
    if (tokenizer.approximate) {
        std::cerr << "warning: counting tokens with the approximate " << tokenizer.name
                  << " tokenizer; budgets are rough\n";
    }

    std::optional<CorpusStore> store;
    if (!config.corpus_path.empty()) {
        store = load_corpus(config.corpus_path, config.corpus_format);
    }
    std::vector<FormattedSample> shorts =
        load_pool(short_path, SampleKind::Short, config.tmpl, store ? &*store : nullptr, tokenizer);
    std::vector<FormattedSample> longs =
        load_pool(long_path, SampleKind::Long, config.tmpl, store ? &*store : nullptr, tokenizer);

    JsonlWriter writer(out_path);
    PackReport report;
    pack_dataset(shorts, longs, config.pmix, tokenizer, config.seed, count,
                 [&](const PackedSequence& seq) { writer.write(packed_to_json(seq)); }, &report);
    if (!report_path.empty()) {
        write_json_file(report_path, report.to_json());
    }
    std::cerr << "pack: " << report.sequences << " sequences, mean fill "
              << report.mean_fill_ratio << ", long-branch frequency "
              << report.long_branch_frequency() << " -> " << out_path << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------- stats

int cmd_stats(const CommonOverrides& common, const std::string& triplets_path,
              const std::string& scores_path, double bucket_width, bool similarity,
              std::size_t sample_size, std::size_t repeats, const std::string& embedder,
              const std::string& export_path, const std::string& out_path) {
    RunConfig config = resolve_config(common);
    std::vector<InstructionTriplet> triplets = read_triplets(triplets_path);
    TokenizerHandle tokenizer = config.tokenizer.resolve();

    Json output;

    if (config.corpus_path.empty()) {
        raise(Errc::Config, "corpus.path is required to resolve triplet contexts");
    }
    CorpusStore store = load_corpus(config.corpus_path, config.corpus_format);
    CostReport cost = cost_report(triplets, store, tokenizer, std::size_t{1024});
    output["cost"] = cost.to_json();

    if (similarity || !export_path.empty()) {
        std::unique_ptr<Client> client;
        if (embedder == "mock") {
            client = std::make_unique<MockClient>(config.mock.value_or(MockConfig()));
        } else if (embedder == "http") {
            client = std::make_unique<HttpClient>(config.client);
        } else {
            raise(Errc::Config, "unknown embedder '" + embedder + "' (mock|http)");
        }
        EmbedFn embed = [&](const std::vector<std::string>& texts) { return client->embed(texts); };

        if (similarity) {
            std::vector<std::string> queries;
            queries.reserve(triplets.size());
            for (const auto& t : triplets) {
                queries.push_back(t.query);
            }
            Rng rng(derive_seed(config.seed, "similarity", 0));
            SimilarityReport sim = similarity_report(queries, embed, sample_size, repeats, rng);
            output["similarity"] = sim.to_json();
        }
        if (!export_path.empty()) {
            std::vector<std::pair<std::string, std::string>> id_and_text;
            id_and_text.reserve(triplets.size());
            for (const auto& t : triplets) {
                id_and_text.emplace_back(t.id, t.query);
            }
            export_embeddings(id_and_text, embed, export_path);
            output["embeddings_tsv"] = export_path;
        }
    }

    if (!scores_path.empty()) {
        RewardHistogram hist = reward_histogram(read_scores(scores_path), bucket_width);
        output["reward"] = hist.to_json();
    }

    if (out_path.empty()) {
        std::cout << output.dump(2) << "\n";
    } else {
        write_json_file(out_path, output);
        std::cerr << "stats: report -> " << out_path << "\n";
    }
    return kExitOk;
}

// -------------------------------------------------------------------- filter

int cmd_filter(const std::string& in_path, const std::string& out_path, const std::string& field) {
    JsonlWriter writer(out_path);
    std::size_t counts[4] = {0, 0, 0, 0};
    std::size_t index = 0;
    for_each_jsonl_record(in_path, [&](Json record, std::size_t line_number) {
        if (!record.contains(field) || !record[field].is_string()) {
            raise(Errc::MalformedRecord, in_path + ":" + std::to_string(line_number) +
                                             ": record missing string field '" + field + "'");
        }
        FilterResult result = filter_query(record[field].get<std::string>());
        counts[static_cast<int>(result.outcome)] += 1;
        Json out;
        out["id"] = record.value("id", std::to_string(index));
        out["outcome"] = filter_outcome_name(result.outcome);
        if (result.query) {
            out["query"] = *result.query;
        }
        writer.write(out);
        ++index;
    });
    std::cerr << "filter: retained " << counts[0] << ", no_question_mark " << counts[1]
              << ", too_long " << counts[2] << ", empty " << counts[3] << " -> " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: long-context instruction data synthesis and packing"};
    app.require_subcommand(1);

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "elicit, filter, respond and extend over a corpus");
    CommonOverrides synth_common;
    add_common_options(synth, synth_common);
    std::size_t limit = 0;
    int workers = 0;
    std::size_t n_override = 0;
    std::size_t qpd = 1;
    bool elicit_on_multidoc = false;
    std::string out_override;
    std::string report_override;
    bool dry_run = false;
    synth->add_option("--limit", limit, "process only the first N documents");
    synth->add_option("--workers", workers, "concurrent pipeline workers");
    auto* n_opt = synth->add_option("--n", n_override, "max distractor documents per instruction");
    auto* qpd_opt = synth->add_option("--queries-per-doc", qpd, "queries elicited per document");
    synth->add_flag("--elicit-on-multidoc", elicit_on_multidoc,
                    "elicit queries over the mixed context instead of post-hoc mixing");
    synth->add_option("--out", out_override, "triplets JSONL output path");
    synth->add_option("--report", report_override, "run report JSON output path");
    synth->add_flag("--dry-run", dry_run, "validate config and print the resolved settings");

    // extend
    auto* extend = app.add_subcommand("extend", "re-draw distractor layouts for existing triplets");
    CommonOverrides extend_common;
    add_common_options(extend, extend_common);
    std::string extend_triplets;
    std::size_t extend_n = 10;
    std::string extend_out = "extended.jsonl";
    extend->add_option("--triplets", extend_triplets, "input triplets JSONL")->required();
    extend->add_option("--n", extend_n, "max distractor documents");
    extend->add_option("--out", extend_out, "output JSONL path");

    // pack
    auto* pack = app.add_subcommand("pack", "build p-Mix training sequences from sample pools");
    CommonOverrides pack_common;
    add_common_options(pack, pack_common);
    std::string short_path;
    std::string long_path;
    std::size_t count = 1;
    std::optional<double> long_prob;
    std::optional<std::size_t> n_short;
    std::optional<std::size_t> max_tokens;
    std::optional<std::string> sep;
    std::string pack_out = "packed.jsonl";
    std::string pack_report = "pack_report.json";
    pack->add_option("--short", short_path, "short-sample pool JSONL")->required();
    pack->add_option("--long", long_path, "long-sample pool JSONL")->required();
    pack->add_option("--count", count, "number of packed sequences")->required();
    pack->add_option("--long-prob", long_prob, "probability of drawing a long sample");
    pack->add_option("--n-short", n_short, "short samples pre-pended to each sequence");
    pack->add_option("--max-tokens", max_tokens, "token budget per sequence");
    pack->add_option("--sep", sep, "separator between packed samples");
    pack->add_option("--out", pack_out, "packed JSONL output path");
    pack->add_option("--pack-report", pack_report, "packing report JSON path");

    // stats
    auto* stats = app.add_subcommand("stats", "dataset diversity / cost reports");
    CommonOverrides stats_common;
    add_common_options(stats, stats_common);
    std::string stats_triplets;
    std::string scores_path;
    double bucket_width = 0.5;
    bool similarity = false;
    std::size_t sample_size = 300;
    std::size_t repeats = 30;
    std::string embedder = "mock";
    std::string export_path;
    std::string stats_out;
    stats->add_option("--triplets", stats_triplets, "triplets JSONL")->required();
    stats->add_option("--scores", scores_path, "reward scores JSONL ({id, score})");
    stats->add_option("--bucket-width", bucket_width, "reward histogram bucket width");
    stats->add_flag("--similarity", similarity, "compute the pairwise query-similarity report");
    stats->add_option("--sample-size", sample_size, "queries sampled per repeat");
    stats->add_option("--repeats", repeats, "similarity sampling repeats");
    stats->add_option("--embedder", embedder, "embedding backend: mock | http");
    stats->add_option("--export-embeddings", export_path, "write query embeddings TSV here");
    stats->add_option("--out", stats_out, "report JSON path (default: stdout)");

    // filter
    auto* filter = app.add_subcommand("filter", "apply the query filter to raw completions");
    std::string filter_in;
    std::string filter_out = "filtered.jsonl";
    std::string filter_field = "text";
    filter->add_option("--in", filter_in, "input JSONL")->required();
    filter->add_option("--out", filter_out, "output JSONL");
    filter->add_option("--field", filter_field, "record field holding the raw completion");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synthesize(synth_common, limit, workers, n_override, n_opt->count() > 0, qpd,
                                  qpd_opt->count() > 0, elicit_on_multidoc, out_override,
                                  report_override, dry_run);
        }
        if (extend->parsed()) {
            return cmd_extend(extend_common, extend_triplets, extend_n, extend_out);
        }
        if (pack->parsed()) {
            return cmd_pack(pack_common, short_path, long_path, count, long_prob, n_short,
                            max_tokens, sep, pack_out, pack_report);
        }
        if (stats->parsed()) {
            return cmd_stats(stats_common, stats_triplets, scores_path, bucket_width, similarity,
                             sample_size, repeats, embedder, export_path, stats_out);
        }
        if (filter->parsed()) {
            return cmd_filter(filter_in, filter_out, filter_field);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
