#pragma once

#include <stdexcept>
#include <string>

namespace sdp {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  usage = 1,    // bad arguments, contract violations
  data = 2,     // schema, parse, config and file problems
  numeric = 3,  // degenerate inputs, non-finite results
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::usage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::data, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::numeric, msg);
}

}  // namespace sdp
