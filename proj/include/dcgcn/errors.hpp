#pragma once

#include <stdexcept>
#include <string>

namespace dcgcn {

/// Malformed user input: files, graphs, token ids, flags.
class InputError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit the operation.
class ShapeError : public InputError {
   public:
    using InputError::InputError;
};

/// Parse failure with a 1-based source location.
class ParseError : public InputError {
   public:
    ParseError(const std::string& what, int line, int column)
        : InputError(what + " at line " + std::to_string(line) + ", column " +
                     std::to_string(column)),
          line_(line),
          column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

   private:
    int line_;
    int column_;
};

/// Non-finite values, divergence, failed gradient checks.
class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace dcgcn
