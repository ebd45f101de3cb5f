#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "forge/io.hpp"

namespace forge {

// Ordered context of one instruction: distractor documents plus the gold
// document the query was elicited from, appearing exactly once.
struct ContextLayout {
    std::vector<std::string> doc_ids;
    std::size_t gold_index = 0;
    std::string separator;

    std::size_t distractor_count() const {
        return doc_ids.empty() ? 0 : doc_ids.size() - 1;
    }
};

struct GenMeta {
    std::string model;
    double temperature = 0.0;
    double top_p = 0.0;
    std::string request_id;
};

struct InstructionTriplet {
    std::string id;
    ContextLayout context;
    std::string query;
    std::string response;
    GenMeta meta;
};

Json triplet_to_json(const InstructionTriplet& triplet);
InstructionTriplet triplet_from_json(const Json& record);

std::vector<InstructionTriplet> read_triplets(const std::filesystem::path& path);

} // namespace forge
