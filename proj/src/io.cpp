#include "forge/io.hpp"

#include "forge/error.hpp"

#include <fstream>
#include <sstream>

namespace forge {

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        raise(Errc::Io, "cannot open " + path.string());
    }
    Json value;
    try {
        in >> value;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::MalformedRecord, path.string() + ": " + e.what());
    }
    return value;
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        raise(Errc::Io, "cannot open " + path.string() + " for writing");
    }
    out << value.dump(2) << '\n';
    if (!out) {
        raise(Errc::Io, "write failed: " + path.string());
    }
}

void for_each_jsonl_record(const std::filesystem::path& path,
                           const std::function<void(Json, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(Errc::Io, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        Json record;
        try {
            record = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_number << ": " << e.what();
            raise(Errc::MalformedRecord, msg.str());
        }
        fn(std::move(record), line_number);
    }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) {
        raise(Errc::Io, "cannot open " + path.string() + " for writing");
    }
}

void JsonlWriter::write(const Json& record) {
    out_ << record.dump() << '\n';
    if (!out_) {
        raise(Errc::Io, "write failed: " + path_.string());
    }
    ++count_;
}

} // namespace forge
