#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rtvt {

// Argument outside an operation's mathematical domain (t <= 0, n < 2, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (CSV row, JSON document). Carries a location when known.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A structurally valid input that breaks one or more semantic rules.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace rtvt
