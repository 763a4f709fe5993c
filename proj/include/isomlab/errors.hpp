#pragma once

#include <stdexcept>
#include <string>

namespace isomlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

// enumeration or band limit above the configured cap
struct CapExceeded : Error {
    using Error::Error;
};

struct NearSingular : Error {
    using Error::Error;
};

struct Degenerate : Error {
    using Error::Error;
};

struct DegenerateEnsemble : Error {
    using Error::Error;
};

struct RecursionBudgetExceeded : Error {
    using Error::Error;
};

struct NoPivot : Error {
    using Error::Error;
};

struct PreconditionFailed : Error {
    using Error::Error;
};

// config problems; `field` is a JSON-pointer-like path
struct ValidationError : Error {
    std::string field;
    ValidationError(std::string f, const std::string& msg)
        : Error(f + ": " + msg), field(std::move(f)) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace isomlab
