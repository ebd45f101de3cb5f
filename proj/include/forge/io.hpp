#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

namespace forge {

// Field order in emitted files is part of the reproducibility contract, so
// all serialization goes through ordered_json.
using Json = nlohmann::ordered_json;

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

// Calls fn(record, line_number) for every non-empty line. Throws
// Errc::MalformedRecord on parse failure, Errc::Io on unreadable paths.
void for_each_jsonl_record(const std::filesystem::path& path,
                           const std::function<void(Json, std::size_t)>& fn);

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);

    void write(const Json& record);
    std::size_t records_written() const { return count_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t count_ = 0;
};

} // namespace forge
