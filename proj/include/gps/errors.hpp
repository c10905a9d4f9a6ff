#pragma once

#include <stdexcept>
#include <string>

#include "gps/biguint.hpp"

namespace gps {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Raised by modinv when gcd(a, m) != 1; carries the offending gcd.
class InversionError : public Error {
 public:
  InversionError(const std::string& what, BigUint gcd) : Error(what), gcd_(std::move(gcd)) {}
  const BigUint& gcd() const noexcept { return gcd_; }

 private:
  BigUint gcd_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class FramingError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class OutOfCoupons : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// Timeout, refused connection or peer close mid-round.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace gps
