#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace quadfdi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The plant produced a non-finite state. `step` is the offending step index.
class NonFiniteState : public Error {
 public:
  NonFiniteState(std::int64_t step, const std::string& what)
      : Error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

class NonFiniteEstimate : public Error {
 public:
  using Error::Error;
};

class SingularInnovation : public Error {
 public:
  using Error::Error;
};

class SingularCovariance : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class DivergentBound : public Error {
 public:
  using Error::Error;
};

class MismatchedRuns : public Error {
 public:
  using Error::Error;
};

/// Fake-state replay drifted from the attacked record.
class ReplayMismatch : public Error {
 public:
  ReplayMismatch(double discrepancy, std::int64_t step, const std::string& what)
      : Error(what), discrepancy_(discrepancy), step_(step) {}
  double discrepancy() const { return discrepancy_; }
  std::int64_t step() const { return step_; }

 private:
  double discrepancy_;
  std::int64_t step_;
};

/// Malformed config text. `line` is 1-based; 0 when not attributable to a line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Config is well-formed but semantically invalid; `key` names the offender.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace quadfdi
