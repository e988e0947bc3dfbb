#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semstream {

/// Root of all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UnboundVariableError : public Error {
public:
    explicit UnboundVariableError(std::string name)
        : Error("unbound variable ?" + name), variable(std::move(name)) {}
    std::string variable;
};

/// Malformed wire payload; line is 1-based.
class CodecParseError : public Error {
public:
    CodecParseError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line(line) {}
    std::size_t line;
};

class QuerySyntaxError : public Error {
public:
    QuerySyntaxError(std::size_t line, std::size_t column, const std::string& expected)
        : Error("query syntax error at " + std::to_string(line) + ":" + std::to_string(column) +
                ": " + expected),
          line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

class QueryValidationError : public Error {
public:
    using Error::Error;
};

class MissingTimestampError : public Error {
public:
    using Error::Error;
};

class MalformedTimestampError : public Error {
public:
    using Error::Error;
};

class DuplicateNodeIdError : public Error {
public:
    using Error::Error;
};

class UndeclaredTopicError : public Error {
public:
    using Error::Error;
};

class NodeUnavailableError : public Error {
public:
    using Error::Error;
};

class ServiceTimeoutError : public Error {
public:
    using Error::Error;
};

class TopicAlreadyRegisteredError : public Error {
public:
    using Error::Error;
};

class UnresolvableStreamError : public Error {
public:
    using Error::Error;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

} // namespace semstream
