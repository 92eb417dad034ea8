#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entrobench {

/// Raised when an operation's precondition is violated by its inputs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation has no well-defined result for otherwise valid
/// inputs (empty class, constant image, degenerate kappa, ...).
class Undefined : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// PGM parse failure; carries the byte offset at which decoding stopped.
class PgmError : public std::runtime_error {
public:
    PgmError(const std::string& message, std::size_t offset)
        : std::runtime_error(message + " at byte " + std::to_string(offset)),
          message_(message),
          offset_(offset) {}

    const std::string& message() const noexcept { return message_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string message_;
    std::size_t offset_;
};

}  // namespace entrobench
