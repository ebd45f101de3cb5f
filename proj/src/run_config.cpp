#include "forge/run_config.hpp"

#include "forge/error.hpp"
#include "forge/http_client.hpp"

namespace forge {

TokenizerHandle TokenizerSpec::resolve() const {
    if (kind == "chars") {
        return char_tokenizer();
    }
    if (kind == "words") {
        return word_tokenizer();
    }
    if (kind == "approx") {
        return approx_tokenizer();
    }
    if (kind == "vocab") {
        if (vocab_path.empty()) {
            raise(Errc::Config, "tokenizer.path is required for kind=vocab");
        }
        return vocab_tokenizer(vocab_path);
    }
    raise(Errc::Config, "unknown tokenizer.kind '" + kind + "' (chars|words|approx|vocab)");
}

namespace {

SamplingParams sampling_from_json(const Json& value, const SamplingParams& defaults) {
    SamplingParams params = defaults;
    params.temperature = value.value("temperature", defaults.temperature);
    params.top_p = value.value("top_p", defaults.top_p);
    params.max_tokens = value.value("max_tokens", defaults.max_tokens);
    if (value.contains("stop")) {
        params.stop = value["stop"].get<std::vector<std::string>>();
    }
    return params;
}

Json sampling_to_json(const SamplingParams& params) {
    Json value;
    value["temperature"] = params.temperature;
    value["top_p"] = params.top_p;
    value["max_tokens"] = params.max_tokens;
    value["stop"] = params.stop;
    return value;
}

} // namespace

RunConfig RunConfig::from_json(const Json& value) {
    RunConfig config;
    try {
        if (value.contains("corpus")) {
            const Json& corpus = value["corpus"];
            config.corpus_path = corpus.value("path", std::string());
            config.corpus_format =
                corpus_format_from_string(corpus.value("format", std::string("jsonl")));
        }
        if (value.contains("template")) {
            if (value["template"].is_string()) {
                config.template_spec = value["template"].get<std::string>();
            } else {
                config.tmpl = template_from_json(value["template"]);
                config.template_spec.clear();
            }
        }
        if (value.contains("client")) {
            const Json& client = value["client"];
            config.client.endpoint = client.value("endpoint", std::string());
            config.client.model = client.value("model", std::string());
            config.client.max_in_flight = client.value("max_in_flight", 4);
            config.client.backoff.retry_limit = client.value("retry_limit", 3);
            config.client.backoff.initial =
                std::chrono::milliseconds(client.value("backoff_initial_ms", 250));
            config.client.backoff.max =
                std::chrono::milliseconds(client.value("backoff_max_ms", 8000));
            config.client.timeout = std::chrono::milliseconds(client.value("timeout_ms", 60000));
            if (client.contains("mock")) {
                if (client["mock"].is_string()) {
                    config.mock_spec = client["mock"].get<std::string>();
                } else {
                    config.mock = MockConfig::from_json(client["mock"]);
                    config.mock_spec = "inline";
                }
            }
        }
        if (value.contains("sampling")) {
            const Json& sampling = value["sampling"];
            config.sampling_overridden = true;
            if (sampling.contains("elicit")) {
                config.elicit = sampling_from_json(sampling["elicit"], config.elicit);
            }
            if (sampling.contains("respond")) {
                config.respond = sampling_from_json(sampling["respond"], config.respond);
            }
        }
        config.multidoc_n = value.value("multidoc_n", std::size_t{10});
        config.queries_per_doc = value.value("queries_per_doc", std::size_t{1});
        config.elicit_on_multidoc = value.value("elicit_on_multidoc", false);
        if (value.contains("pmix")) {
            const Json& pmix = value["pmix"];
            config.pmix.short_prefix_count = pmix.value("n_short", std::size_t{1});
            config.pmix.long_prob = pmix.value("long_prob", 0.4);
            config.pmix.max_tokens = pmix.value("max_tokens", std::size_t{65536});
            if (pmix.contains("sep")) {
                config.pmix.sep = pmix["sep"].get<std::string>();
                config.pmix_sep_set = true;
            }
        }
        if (value.contains("tokenizer")) {
            config.tokenizer.kind = value["tokenizer"].value("kind", std::string("chars"));
            config.tokenizer.vocab_path = value["tokenizer"].value("path", std::string());
        }
        config.seed = value.value("seed", std::uint64_t{0});
        config.limit = value.value("limit", std::size_t{0});
        config.workers = value.value("workers", 4);
        if (value.contains("output")) {
            config.out_triplets = value["output"].value("triplets", config.out_triplets);
            config.out_report = value["output"].value("report", config.out_report);
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::Config, std::string("bad run config: ") + e.what());
    }
    return config;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

void RunConfig::finalize() {
    if (!template_spec.empty()) {
        tmpl = load_template(template_spec);
    }
    tmpl.validate();
    if (!sampling_overridden) {
        elicit = default_elicit_params(tmpl);
        respond = default_respond_params(tmpl);
    } else {
        // stop defaults still come from the template when not supplied
        if (elicit.stop.empty()) {
            elicit.stop = default_elicit_params(tmpl).stop;
        }
        if (respond.stop.empty()) {
            respond.stop = default_respond_params(tmpl).stop;
        }
    }
    if (!pmix_sep_set) {
        pmix.sep = tmpl.end_of_turn;
    }
    if (!mock && !mock_spec.empty() && mock_spec != "inline") {
        if (mock_spec == "hash") {
            mock = MockConfig();
        } else {
            mock = MockConfig::from_file(mock_spec);
        }
    }
}

void RunConfig::validate_for_synthesis() const {
    if (corpus_path.empty()) {
        raise(Errc::Config, "corpus.path is required");
    }
    if (!std::filesystem::exists(corpus_path)) {
        raise(Errc::Config, "corpus.path does not exist: " + corpus_path);
    }
    tmpl.validate();
    elicit.validate();
    respond.validate();
    if (!mock) {
        if (client.endpoint.empty()) {
            raise(Errc::Config, "client.endpoint is required unless a mock backend is configured");
        }
        client.validate();
    }
    if (workers < 1) {
        raise(Errc::Config, "workers must be >= 1");
    }
}

std::unique_ptr<Client> RunConfig::make_client() const {
    if (mock) {
        return std::make_unique<MockClient>(*mock);
    }
    return std::make_unique<HttpClient>(client);
}

Json RunConfig::resolved_json() const {
    Json value;
    value["corpus"] = Json{{"path", corpus_path},
                           {"format", corpus_format == CorpusFormat::Jsonl ? "jsonl" : "plain-dir"}};
    value["template"] = template_to_json(tmpl);
    Json client_json;
    client_json["endpoint"] = client.endpoint;
    client_json["api_key"] = client.api_key.empty() ? "" : "<redacted>";
    client_json["model"] = client.model;
    client_json["max_in_flight"] = client.max_in_flight;
    client_json["retry_limit"] = client.backoff.retry_limit;
    client_json["backoff_initial_ms"] = client.backoff.initial.count();
    client_json["backoff_max_ms"] = client.backoff.max.count();
    client_json["timeout_ms"] = client.timeout.count();
    client_json["mock"] = mock ? (mock_spec.empty() ? "hash" : mock_spec) : "";
    value["client"] = std::move(client_json);
    value["sampling"] =
        Json{{"elicit", sampling_to_json(elicit)}, {"respond", sampling_to_json(respond)}};
    value["multidoc_n"] = multidoc_n;
    value["queries_per_doc"] = queries_per_doc;
    value["elicit_on_multidoc"] = elicit_on_multidoc;
    value["pmix"] = Json{{"n_short", pmix.short_prefix_count},
                         {"long_prob", pmix.long_prob},
                         {"max_tokens", pmix.max_tokens},
                         {"sep", pmix.sep}};
    value["tokenizer"] = Json{{"kind", tokenizer.kind}, {"path", tokenizer.vocab_path}};
    value["seed"] = seed;
    value["limit"] = limit;
    value["workers"] = workers;
    value["output"] = Json{{"triplets", out_triplets}, {"report", out_report}};
    return value;
}

PipelineConfig pipeline_config_from(const RunConfig& config) {
    PipelineConfig cfg;
    cfg.tmpl = config.tmpl;
    cfg.elicit = config.elicit;
    cfg.respond = config.respond;
    cfg.multidoc_n = config.multidoc_n;
    cfg.queries_per_doc = config.queries_per_doc;
    cfg.elicit_on_multidoc = config.elicit_on_multidoc;
    cfg.seed = config.seed;
    cfg.limit = config.limit;
    cfg.workers = config.workers;
    return cfg;
}

} // namespace forge
