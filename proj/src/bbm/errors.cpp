#include "bbm/errors.hpp"

namespace bbm {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::PopulationCapExceeded: return "PopulationCapExceeded";
    case ErrorCode::NotACheckpoint: return "NotACheckpoint";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::NotAlive: return "NotAlive";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::UnknownStatistic: return "UnknownStatistic";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace bbm
