#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deltarank {

/// Malformed input file or record. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input that parsed but violates a domain invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Internal invariant broken; indicates a bug rather than bad input.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace deltarank
