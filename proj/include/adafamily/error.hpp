#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adafam {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A hyperparameter or argument outside its admissible range.
class DomainError : public Error {
public:
    using Error::Error;
};

// Buffer lengths or matrix shapes that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A NaN or infinite value where a finite one is required.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::size_t index)
        : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Malformed input text. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(format(source, line, what)), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& source, std::size_t line,
                              const std::string& what) {
        std::string out = source;
        if (line > 0) out += ":" + std::to_string(line);
        return out + ": " + what;
    }

    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace adafam
