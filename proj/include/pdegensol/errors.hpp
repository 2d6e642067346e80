#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdegensol {

/// Malformed expression text. `position` is a byte offset into the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownIdentifier : public ParseError {
 public:
  UnknownIdentifier(const std::string& name, std::size_t position)
      : ParseError("unknown identifier '" + name + "'", position), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ArityMismatch : public ParseError {
 public:
  ArityMismatch(const std::string& name, std::size_t expected, std::size_t got,
                std::size_t position)
      : ParseError("function '" + name + "' expects " + std::to_string(expected) +
                       " argument(s), got " + std::to_string(got),
                   position) {}
};

// Numeric layer. DomainError means "this point is unusable", the verifier
// resamples; the others mark a point indeterminate.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class QuadratureNonconvergence : public NumericError {
 public:
  QuadratureNonconvergence(const std::string& what, double lo, double hi)
      : NumericError(what), lo_(lo), hi_(hi) {}
  double worst_lo() const noexcept { return lo_; }
  double worst_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

class RootNotFound : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateRoot : public NumericError {
 public:
  using NumericError::NumericError;
};

class NestLimitExceeded : public NumericError {
 public:
  using NumericError::NumericError;
};

class SamplingExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownFamily : public std::out_of_range {
 public:
  explicit UnknownFamily(const std::string& id)
      : std::out_of_range("unknown family id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace pdegensol
