#pragma once

#include <stdexcept>
#include <string>

namespace amodal {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (out-of-range fractions, empty queries, bad config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Two operands that must share dimensions do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Image or mask file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An agent response did not contain a usable schema instance.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// A backend response violated the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Network failure, timeout, or exhausted retries.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// 401/403 from a remote backend; never retried.
class AuthError : public Error {
 public:
  using Error::Error;
};

/// Fixture lookup failure in a mock backend.
class FixtureError : public Error {
 public:
  using Error::Error;
};

}  // namespace amodal
