#pragma once

#include <stdexcept>
#include <string>

namespace scgan {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid setting or incompatible shapes/specs.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-domain input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Operation invoked in the wrong state (e.g. backward without forward).
class StateError : public Error {
public:
    using Error::Error;
};

/// Checkpoint container could not be decoded.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced during a numeric pass.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace scgan
