#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace failslow {

enum class ErrorKind {
  EmptyInput,
  InvalidSplit,
  Parse,
  Shape,
  Contract,
  NumericFailure,
  Config,
  InsufficientPeers,
  DegenerateTraining,
  UnknownDisk,
  Protocol,
  OverBudget,
  InvalidFolds,
  Unsupported,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the whole library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace failslow
