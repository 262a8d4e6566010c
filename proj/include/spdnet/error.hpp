#pragma once

#include <stdexcept>
#include <string>

namespace spdnet {

// Values double as CLI exit codes for the categories the CLI exposes.
enum class ErrorCode : int {
    InvalidArgument = 1,
    Io = 2,
    Numerical = 3,
    Schema = 4,
    UnlabeledCase = 5,
    ShapeMismatch = 6,
    Version = 7,
    CorruptFile = 8,
    MissingComponent = 9,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error(ErrorCode::InvalidArgument, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorCode::Io, w) {}
};
// Raised when a loss or gradient becomes non-finite; carries the last checkpoint written, if any.
struct NumericalError : Error {
    NumericalError(const std::string& w, std::string last_checkpoint = {})
        : Error(ErrorCode::Numerical, w), last_checkpoint(std::move(last_checkpoint)) {}
    std::string last_checkpoint;
};
struct SchemaError : Error {
    explicit SchemaError(const std::string& w) : Error(ErrorCode::Schema, w) {}
};
struct UnlabeledCaseError : Error {
    explicit UnlabeledCaseError(const std::string& w) : Error(ErrorCode::UnlabeledCase, w) {}
};
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& w) : Error(ErrorCode::ShapeMismatch, w) {}
};
struct VersionError : Error {
    explicit VersionError(const std::string& w) : Error(ErrorCode::Version, w) {}
};
struct CorruptFileError : Error {
    explicit CorruptFileError(const std::string& w) : Error(ErrorCode::CorruptFile, w) {}
};
struct MissingComponentError : Error {
    explicit MissingComponentError(const std::string& w) : Error(ErrorCode::MissingComponent, w) {}
};

}  // namespace spdnet
