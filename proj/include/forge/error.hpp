#pragma once

#include <stdexcept>
#include <string>

namespace forge {

enum class Errc {
    Io,
    Config,
    DuplicateId,
    MalformedRecord,
    InsufficientDocuments,
    EmptyCorpus,
    UnknownFamily,
    IncompleteTriplet,
    Transport,
    BackendRejected,
    DimensionMismatch,
    EmptyResponse,
    EmptyPool,
    NoFit,
    TooFewQueries,
    EmptyDataset,
    EmptyScores,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace forge
