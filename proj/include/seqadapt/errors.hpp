#pragma once

#include <stdexcept>
#include <string>

namespace seqadapt {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or length mismatch between tensors / vectors.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Precondition violation on domain values (empty dataset, bad ratio, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required (divergence, overflow).
class NumericError : public Error {
public:
    using Error::Error;
};

// Bad or incomplete configuration (missing range file, unknown variant, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem and parsing failures.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace seqadapt
