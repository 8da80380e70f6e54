#pragma once

#include <stdexcept>
#include <string>

namespace glmnet {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible shapes; the message names both shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A normalization met a row with no mass (all-zero support row, zero row sum).
class DegenerateRowError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (non-scalar loss, nonpositive
// Sinkhorn input, empty ground truth, oracle size guard, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf surfaced in a forward value or a parameter.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset file; carries line/record context in the message.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class ChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace glmnet
