#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rram {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition or invariant violated by caller-supplied values.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed input file. The message names the offending field path.
class ParseError : public Error {
public:
    using Error::Error;
};

// A network or configuration that parses but breaks an invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Configuration rejected with every problem found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

}  // namespace rram
