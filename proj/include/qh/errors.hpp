#pragma once

#include <stdexcept>
#include <string>

namespace qh {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands live on different grids.
struct GridMismatch : Error {
    using Error::Error;
};

struct NonFiniteError : Error {
    using Error::Error;
};

// Density below the configured floor where ln rho or 1/rho is needed.
struct FloorViolation : Error {
    FloorViolation(const std::string& what, std::size_t index_)
        : Error(what), index(index_) {}
    std::size_t index;
};

struct NodeError : Error {
    NodeError(const std::string& what, std::size_t index_)
        : Error(what), index(index_) {}
    std::size_t index;
};

struct CflViolation : Error {
    using Error::Error;
};

struct SchemeMismatch : Error {
    using Error::Error;
};

struct EscapeError : Error {
    using Error::Error;
};

struct InsufficientSamples : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& what, int line_ = 0, std::string field_ = {})
        : Error(what), line(line_), field(std::move(field_)) {}
    int line;
    std::string field;
};

}  // namespace qh
