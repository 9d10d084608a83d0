#pragma once

#include <stdexcept>
#include <string>

namespace tslab {

// Base class for all library errors. Subtypes exist so callers can
// distinguish recoverable numerical conditions from usage errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotPositiveDefinite : Error {
    explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

struct NonFinite : Error {
    explicit NonFinite(const std::string& msg) : Error(msg) {}
};

struct InvalidRho : Error {
    explicit InvalidRho(const std::string& msg) : Error(msg) {}
};

struct ZeroVariance : Error {
    explicit ZeroVariance(const std::string& msg) : Error(msg) {}
};

struct NonStationarySpec : Error {
    explicit NonStationarySpec(const std::string& msg) : Error(msg) {}
};

struct SingularRegression : Error {
    explicit SingularRegression(const std::string& msg) : Error(msg) {}
};

struct Divergence : Error {
    explicit Divergence(const std::string& msg) : Error(msg) {}
};

struct NotConverged : Error {
    explicit NotConverged(const std::string& msg) : Error(msg) {}
};

struct AllUnpenalized : Error {
    explicit AllUnpenalized(const std::string& msg) : Error(msg) {}
};

struct InvalidParams : Error {
    explicit InvalidParams(const std::string& msg) : Error(msg) {}
};

// Carries the offending scale value so callers can report it instead of
// silently clamping.
struct InvalidXi : Error {
    double xi;
    InvalidXi(const std::string& msg, double xi_value) : Error(msg), xi(xi_value) {}
};

struct DegenerateDenominator : Error {
    explicit DegenerateDenominator(const std::string& msg) : Error(msg) {}
};

struct InsufficientHistory : Error {
    explicit InsufficientHistory(const std::string& msg) : Error(msg) {}
};

struct NonPositiveForLog : Error {
    explicit NonPositiveForLog(const std::string& msg) : Error(msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace tslab
