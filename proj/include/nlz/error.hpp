#pragma once

#include <stdexcept>
#include <string>

namespace nlz {

enum class ErrorKind {
    SizeMismatch,
    NonFinite,
    ShapeMismatch,
    PadImpossible,
    CorruptPayload,
    ToolMissing,
    ToolFailed,
    BoundViolated,
    ConfigError,
    Diverged,
    CorruptWeights,
    CorruptBlob,
    IndexOutOfRange,
    BadMagic,
    VersionUnsupported,
    SectionLengthMismatch,
    DegenerateRange,
    Extrapolation,
    IoError,
};

const char* to_string(ErrorKind kind);

// Every failure in the library surfaces as an nlz::Error carrying a kind tag,
// so callers (CLI, bindings, tests) can branch on the category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::PadImpossible: return "PadImpossible";
    case ErrorKind::CorruptPayload: return "CorruptPayload";
    case ErrorKind::ToolMissing: return "ToolMissing";
    case ErrorKind::ToolFailed: return "ToolFailed";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::CorruptWeights: return "CorruptWeights";
    case ErrorKind::CorruptBlob: return "CorruptBlob";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::SectionLengthMismatch: return "SectionLengthMismatch";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::Extrapolation: return "Extrapolation";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace nlz
