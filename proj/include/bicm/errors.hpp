#pragma once

#include <stdexcept>
#include <string>

namespace bicm {

/// Invalid or inconsistent configuration (sizes, variances, lengths).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad runtime input (non-finite samples, wrong bit-group sizes).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Text-format parse failure; the message names the offending line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Argument outside a function's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A Monte Carlo draw that hits a numerical singularity. Callers redraw and count.
class DegenerateDraw : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bicm
