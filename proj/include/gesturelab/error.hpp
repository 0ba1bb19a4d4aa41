#pragma once

#include <stdexcept>
#include <string>

namespace gesturelab {

/// Broad failure class, mapped one-to-one onto CLI exit codes.
enum class ErrorCategory {
  config = 2,
  parse = 3,
  validation = 4,
  format = 5,
  alignment = 6,
  shape = 7,
  numeric = 8,
  io = 9,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace gesturelab
