#include "forge/triplet.hpp"

#include "forge/error.hpp"

namespace forge {

Json triplet_to_json(const InstructionTriplet& triplet) {
    Json context;
    context["doc_ids"] = triplet.context.doc_ids;
    context["gold_index"] = triplet.context.gold_index;
    context["separator"] = triplet.context.separator;

    Json meta;
    meta["model"] = triplet.meta.model;
    meta["temperature"] = triplet.meta.temperature;
    meta["top_p"] = triplet.meta.top_p;
    meta["x"] = triplet.context.distractor_count();

    Json record;
    record["id"] = triplet.id;
    record["context"] = std::move(context);
    record["query"] = triplet.query;
    record["response"] = triplet.response;
    record["meta"] = std::move(meta);
    return record;
}

InstructionTriplet triplet_from_json(const Json& record) {
    InstructionTriplet triplet;
    try {
        triplet.id = record.at("id").get<std::string>();
        const Json& context = record.at("context");
        triplet.context.doc_ids = context.at("doc_ids").get<std::vector<std::string>>();
        triplet.context.gold_index = context.at("gold_index").get<std::size_t>();
        triplet.context.separator = context.at("separator").get<std::string>();
        triplet.query = record.at("query").get<std::string>();
        triplet.response = record.at("response").get<std::string>();
        if (record.contains("meta")) {
            const Json& meta = record["meta"];
            triplet.meta.model = meta.value("model", std::string());
            triplet.meta.temperature = meta.value("temperature", 0.0);
            triplet.meta.top_p = meta.value("top_p", 0.0);
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::MalformedRecord, std::string("bad triplet record: ") + e.what());
    }
    if (!triplet.context.doc_ids.empty() && triplet.context.gold_index >= triplet.context.doc_ids.size()) {
        raise(Errc::MalformedRecord, "triplet '" + triplet.id + "' gold_index out of range");
    }
    return triplet;
}

std::vector<InstructionTriplet> read_triplets(const std::filesystem::path& path) {
    std::vector<InstructionTriplet> out;
    for_each_jsonl_record(path, [&](Json record, std::size_t) {
        out.push_back(triplet_from_json(record));
    });
    return out;
}

} // namespace forge
