#include "bubbleid/error.hpp"

namespace bubbleid {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::CenterOutsideInstance: return "CenterOutsideInstance";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidRange: return "InvalidRange";
        case ErrorKind::PlacementFailure: return "PlacementFailure";
        case ErrorKind::DegenerateSegment: return "DegenerateSegment";
        case ErrorKind::InsufficientPoints: return "InsufficientPoints";
        case ErrorKind::NonEllipseConic: return "NonEllipseConic";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::Format: return "Format";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace bubbleid
