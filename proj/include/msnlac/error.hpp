#pragma once

#include <stdexcept>
#include <string>

namespace msnlac {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments, violated preconditions, unreadable or malformed input.
class InputError : public Error {
public:
    using Error::Error;
};

// Two rasters that must share dimensions do not.
class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

// Root finders that fail to bracket, divergent iterations, non-finite energies.
class NumericalError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw InputError(what);
}

} // namespace msnlac
