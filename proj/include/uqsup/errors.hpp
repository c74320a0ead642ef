#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace uqsup {

// A record or argument does not satisfy an operation's preconditions.
class precondition_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A metric has no value for the given input (empty denominator, zero variance, ...).
class undefined_metric_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed file content. Carries the 1-based line (0 when not line-oriented)
// and an optional key name.
class format_error : public std::runtime_error {
public:
    format_error(const std::string& what, std::size_t line = 0, std::string key = {})
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line), key_(std::move(key)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

} // namespace uqsup
