#pragma once

#include <stdexcept>
#include <string>

namespace mincouple {

enum class ErrorKind {
    DegenerateMetric,
    DomainExit,
    BadParams,
    ParticlesCoincident,
    NotOnSigmaE,
    TooFewSamples,
    BadDimension,
    MissingBoundary,
    ConfigError,
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::DegenerateMetric: return "DegenerateMetric";
    case ErrorKind::DomainExit: return "DomainExit";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::ParticlesCoincident: return "ParticlesCoincident";
    case ErrorKind::NotOnSigmaE: return "NotOnSigmaE";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::BadDimension: return "BadDimension";
    case ErrorKind::MissingBoundary: return "MissingBoundary";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when a chart step leaves the chart domain. `hit_boundary()` is true
/// when the domain edge is a genuine boundary of the surface rather than a
/// chart limit.
class DomainExit : public Error {
public:
    DomainExit(bool hit_boundary, const std::string& what)
        : Error(ErrorKind::DomainExit, what), hit_boundary_(hit_boundary)
    {
    }

    bool hit_boundary() const noexcept { return hit_boundary_; }

private:
    bool hit_boundary_;
};

} // namespace mincouple
