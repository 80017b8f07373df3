#pragma once

#include <stdexcept>
#include <string>

namespace labelforge {

/// Base of every error thrown by the library. Messages carry enough
/// context (file, line, symbol) to be shown to a user unchanged.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class DataError : public Error {
public:
    using Error::Error;
};

/// A value is well-formed but violates a domain rule (unknown class,
/// unknown concept, bad weight, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Shapes that must agree do not (program count vs params, d vs d').
class DimensionError : public Error {
public:
    using Error::Error;
};

}  // namespace labelforge
