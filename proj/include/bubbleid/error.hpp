#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bubbleid {

enum class ErrorKind {
    CenterOutsideInstance,
    DimensionMismatch,
    InvalidRange,
    PlacementFailure,
    DegenerateSegment,
    InsufficientPoints,
    NonEllipseConic,
    NonFiniteLoss,
    Format,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers (the CLI in
/// particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace bubbleid
