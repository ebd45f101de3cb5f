#include "forge/error.hpp"

namespace forge {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::Io: return "Io";
    case Errc::Config: return "Config";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::InsufficientDocuments: return "InsufficientDocuments";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnknownFamily: return "UnknownFamily";
    case Errc::IncompleteTriplet: return "IncompleteTriplet";
    case Errc::Transport: return "Transport";
    case Errc::BackendRejected: return "BackendRejected";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptyResponse: return "EmptyResponse";
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::NoFit: return "NoFit";
    case Errc::TooFewQueries: return "TooFewQueries";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::EmptyScores: return "EmptyScores";
    }
    return "Unknown";
}

} // namespace forge
