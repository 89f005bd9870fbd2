// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nbo {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape or size of an input does not match what the model/spec declares.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A value is outside its contractual range (probabilities, rates, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// NaN or infinity where a finite number is required.
class NonFiniteError : public Error {
public:
  using Error::Error;
};

/// Input file or frame could not be parsed.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Configuration (feature spec, server config) is internally inconsistent.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Event older than the user's last applied update.
class StaleEventError : public Error {
public:
  using Error::Error;
};

/// Filesystem or socket failure, including corrupt snapshots.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace nbo
