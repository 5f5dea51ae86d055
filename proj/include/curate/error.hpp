#pragma once

#include <stdexcept>
#include <string>

namespace curate {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A record could not be decoded (bad syntax, bad UTF-8, wrong field type).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A record decoded but violates the document schema (missing id/text, duplicate id).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Bad parameters or configuration; the CLI maps these to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A plan or sampling request cannot be satisfied with the available tokens.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or inconsistent dimensions in numeric code.
class NumericError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace curate
