#pragma once

#include <stdexcept>
#include <string>

namespace fdr {

// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind { InvalidInput, NumericalFailure, Unsupported, InsufficientData };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

  // 2 invalid input / unsupported, 3 numerical failure, 4 insufficient data
  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::NumericalFailure: return 3;
      case ErrorKind::InsufficientData: return 4;
      default: return 2;
    }
  }

private:
  ErrorKind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

struct UnsupportedFeature : Error {
  explicit UnsupportedFeature(const std::string& what) : Error(ErrorKind::Unsupported, what) {}
};

struct InsufficientData : Error {
  explicit InsufficientData(const std::string& what) : Error(ErrorKind::InsufficientData, what) {}
};

// Carries the last usable estimate (power iteration) or iteration count (solvers).
struct NumericalFailure : Error {
  NumericalFailure(const std::string& what, double last = 0.0)
      : Error(ErrorKind::NumericalFailure, what), last_value(last) {}
  double last_value;
};

}  // namespace fdr
