#include <lbbp/errors.hpp>

namespace lbbp {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Topology: return "TopologyError";
    case ErrorCode::InvalidLevelSpec: return "InvalidLevelSpec";
    case ErrorCode::DisconnectedMesh: return "DisconnectedMesh";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::DuplicateLandmark: return "DuplicateLandmark";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::IllConditionedGram: return "IllConditionedGram";
    case ErrorCode::NonpositiveConformalFactor: return "NonpositiveConformalFactor";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Config: return "ConfigError";
    }
    return "UnknownError";
}

} // namespace lbbp
