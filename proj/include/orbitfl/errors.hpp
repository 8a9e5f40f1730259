#pragma once

#include <stdexcept>
#include <string>

namespace orbitfl {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file (IDX, config) or inconsistent dataset.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem, located at a key and (when known) a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& what)
      : std::runtime_error(Format(key, line, what)), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string Format(const std::string& key, int line, const std::string& what) {
    std::string s = key.empty() ? std::string("config") : key;
    if (line > 0) s += " (line " + std::to_string(line) + ")";
    return s + ": " + what;
  }

  std::string key_;
  int line_;
};

/// Transfer attempted over a link with zero rate.
class LinkUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradient descent produced a non-finite value.
class NumericDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset could not be split as requested.
class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The event loop ran dry, or stalled, before the run completed.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace orbitfl
