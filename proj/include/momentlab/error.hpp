#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace momentlab {

enum class ErrorKind {
    InvalidArgument,
    CoincidentEigenvalues,
    DefectiveMode,
    SequenceTooShort,
    ZeroPerturbation,
    PrecisionTooLow,
    ResidualTooLarge,
    VanishingObservation,
    InsufficientSamples,
    DegenerateDesign,
};

inline std::string_view to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::CoincidentEigenvalues: return "CoincidentEigenvalues";
    case ErrorKind::DefectiveMode: return "DefectiveMode";
    case ErrorKind::SequenceTooShort: return "SequenceTooShort";
    case ErrorKind::ZeroPerturbation: return "ZeroPerturbation";
    case ErrorKind::PrecisionTooLow: return "PrecisionTooLow";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::VanishingObservation: return "VanishingObservation";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

    /// Numerical failures (as opposed to bad input).
    bool numerical() const noexcept
    {
        return kind_ == ErrorKind::PrecisionTooLow || kind_ == ErrorKind::ResidualTooLarge;
    }

private:
    ErrorKind kind_;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw Error(ErrorKind::InvalidArgument, msg);
}

} // namespace momentlab
