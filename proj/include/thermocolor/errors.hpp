#pragma once

#include <stdexcept>
#include <string>

namespace thermocolor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed, truncated or unsupported file content.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Inconsistent dimensions between inputs, or degenerate (empty) sizes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Singular linear systems and degenerate point configurations.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A registration could not produce a usable crop.
class RegistrationError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf showed up where finite values are required.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Missing files, unreadable directories and similar I/O problems.
class IoError : public Error {
public:
    using Error::Error;
};

/// Bad command-line flags or configuration keys.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace thermocolor
