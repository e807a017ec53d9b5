#pragma once

#include <stdexcept>
#include <string>

namespace defreg {

// Root of every error the library throws. Callers that only need to
// distinguish "our" failures from std ones catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or truncated file content (PGM, CSV, transform text).
class FormatError : public Error {
public:
    using Error::Error;
};

// A value violates an operation's precondition (non-positive spacing,
// dimension mismatch, alpha out of range, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Configuration file problems and unusable configurations (empty ROI).
class ConfigError : public Error {
public:
    using Error::Error;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class LevelTooDeepError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

// Fewer than half of the metric samples mapped inside the moving image.
class DegenerateOverlapError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class EmptyResultError : public Error {
public:
    using Error::Error;
};

class UndefinedMapeError : public Error {
public:
    using Error::Error;
};

}  // namespace defreg
