#pragma once

#include <stdexcept>
#include <string>

namespace lbbp {

/// Stable error categories. The CLI maps these to process exit codes.
enum class ErrorCode {
    Parse,
    Topology,
    InvalidLevelSpec,
    DisconnectedMesh,
    LinearSolveFailure,
    ConvergenceFailure,
    InvalidK,
    DuplicateLandmark,
    IndexOutOfRange,
    EmptyFeatureSet,
    IllConditionedGram,
    NonpositiveConformalFactor,
    LineSearchFailure,
    MaxIterationsExceeded,
    DimensionMismatch,
    Io,
    Config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , m_code(code)
    {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

template <ErrorCode Code>
class TypedError : public Error
{
public:
    explicit TypedError(const std::string& what)
        : Error(Code, what)
    {}
};

using ParseError = TypedError<ErrorCode::Parse>;
using TopologyError = TypedError<ErrorCode::Topology>;
using InvalidLevelSpec = TypedError<ErrorCode::InvalidLevelSpec>;
using DisconnectedMesh = TypedError<ErrorCode::DisconnectedMesh>;
using LinearSolveFailure = TypedError<ErrorCode::LinearSolveFailure>;
using ConvergenceFailure = TypedError<ErrorCode::ConvergenceFailure>;
using InvalidK = TypedError<ErrorCode::InvalidK>;
using DuplicateLandmark = TypedError<ErrorCode::DuplicateLandmark>;
using IndexOutOfRange = TypedError<ErrorCode::IndexOutOfRange>;
using EmptyFeatureSet = TypedError<ErrorCode::EmptyFeatureSet>;
using IllConditionedGram = TypedError<ErrorCode::IllConditionedGram>;
using NonpositiveConformalFactor = TypedError<ErrorCode::NonpositiveConformalFactor>;
using LineSearchFailure = TypedError<ErrorCode::LineSearchFailure>;
using MaxIterationsExceeded = TypedError<ErrorCode::MaxIterationsExceeded>;
using DimensionMismatch = TypedError<ErrorCode::DimensionMismatch>;
using IoError = TypedError<ErrorCode::Io>;
using ConfigError = TypedError<ErrorCode::Config>;

} // namespace lbbp
