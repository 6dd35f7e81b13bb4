#pragma once

#include <stdexcept>
#include <string>

namespace photostat {

/// Rejected input: violated precondition or type invariant.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure (typically a fit) failed to produce a result.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage.empty() ? what : stage + ": " + what),
        stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// File could not be opened, read, or written, or has a malformed layout.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace photostat
