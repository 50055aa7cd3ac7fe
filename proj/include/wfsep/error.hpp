#pragma once

#include <stdexcept>
#include <string>

namespace wfsep {

// Root of every error the toolkit throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition or invariant on caller-supplied data does not hold.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(what + ": " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public ParseError {
public:
    using ParseError::ParseError;
};

class TruncatedError : public ParseError {
public:
    using ParseError::ParseError;
};

class UnknownDtypeError : public ParseError {
public:
    using ParseError::ParseError;
};

// The least-squares design matrix is rank deficient.
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// A computation produced a non-finite or otherwise unusable number.
class NumericError : public Error {
public:
    using Error::Error;
};

// Too few observations for the requested statistic.
class InsufficientDataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A statistic is undefined because a sample has no spread.
class ZeroVarianceError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace wfsep
