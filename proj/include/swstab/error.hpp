#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace swstab {

enum class ErrorKind {
    InvalidArgument,
    NonFinite,
    NotSquare,
    DimensionMismatch,
    SingularMatrix,
    NotMetzler,
    NotIrreducible,
    NoConvergence,
    NotSymmetric,
    NotPositiveDefinite,
    BadRowSum,
    NegativeRate,
    Reducible,
    AbsorbingState,
    MissingBeta,
    UnknownFixture,
    EmptyGroup,
    UnsortedThresholds,
    UnboundedRates,
    UnboundedBeta,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NotMetzler: return "NotMetzler";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::BadRowSum: return "BadRowSum";
    case ErrorKind::NegativeRate: return "NegativeRate";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::AbsorbingState: return "AbsorbingState";
    case ErrorKind::MissingBeta: return "MissingBeta";
    case ErrorKind::UnknownFixture: return "UnknownFixture";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::UnsortedThresholds: return "UnsortedThresholds";
    case ErrorKind::UnboundedRates: return "UnboundedRates";
    case ErrorKind::UnboundedBeta: return "UnboundedBeta";
    }
    return "Unknown";
}

/// Thrown for malformed input and numerical failures. Refusals of a
/// certificate route are values (see certify.hpp), not exceptions.
class Error : public std::runtime_error {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    Error(ErrorKind kind, const std::string& message, std::size_t index = npos,
          std::size_t second_index = npos, double value = 0.0)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind), message_(message), index_(index), second_index_(second_index),
          value_(value) {}

    ErrorKind kind() const noexcept { return kind_; }
    // what() without the kind prefix.
    const std::string& message() const noexcept { return message_; }
    // Row, mode or group the error refers to (0-based), npos when not applicable.
    std::size_t index() const noexcept { return index_; }
    std::size_t second_index() const noexcept { return second_index_; }
    // Extra numeric payload, e.g. the last residual for NoConvergence.
    double value() const noexcept { return value_; }

private:
    ErrorKind kind_;
    std::string message_;
    std::size_t index_;
    std::size_t second_index_;
    double value_;
};

} // namespace swstab
