#pragma once

#include <stdexcept>
#include <string>

namespace scilit {

// Base for all scilit errors. Subclasses carry the failure identity so
// callers can catch by kind; the what() string carries the detail.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input/precondition violations surfaced from public APIs.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ChecksumMismatch : public IoError {
public:
    using IoError::IoError;
};

class VersionMismatch : public IoError {
public:
    using IoError::IoError;
};

class DuplicateKey : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace scilit
