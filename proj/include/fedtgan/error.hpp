#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedtgan {

enum class ErrorKind {
    MissingFile,
    EmptyTable,
    ArityMismatch,
    UnknownColumn,
    WrongKind,
    InvalidArgument,
    SchemaMismatch,
    UnknownToken,
    WidthMismatch,
    ShardTooSmall,
    Protocol,
    Timeout,
    ClientFailure,
    Config,
    Io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::EmptyTable: return "EmptyTable";
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::UnknownColumn: return "UnknownColumn";
        case ErrorKind::WrongKind: return "WrongKind";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::UnknownToken: return "UnknownToken";
        case ErrorKind::WidthMismatch: return "WidthMismatch";
        case ErrorKind::ShardTooSmall: return "ShardTooSmall";
        case ErrorKind::Protocol: return "Protocol";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::ClientFailure: return "ClientFailure";
        case ErrorKind::Config: return "Config";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// All library failures are reported with this exception; `kind()` is stable
/// for programmatic handling, `what()` carries the diagnostic.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) throw Error(kind, message);
}

}  // namespace fedtgan
