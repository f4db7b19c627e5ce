#pragma once

#include <stdexcept>
#include <string>

namespace exf {

// Precondition violations: bad domain for log2/sqrt, division by zero,
// non-canonical input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Float exponent left [-2^p, 2^p), or a value too large to materialize.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Model file problems. `path` is a JSON-pointer-like field path.
class LoadError : public std::runtime_error {
 public:
  LoadError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Model uses a feature the requested evaluation mode does not admit.
class ModeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Output exactly zero: membership is undefined for strict-sign recognition.
class TieError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace exf
