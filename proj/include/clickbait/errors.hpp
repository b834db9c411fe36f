#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clickbait {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A valid convolution was asked to run over fewer steps than its width.
class SequenceTooShortError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a documented precondition (bad label, empty input, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Binary / text format errors.

class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// The file ended before a declared payload was complete. `entry_index` is
/// the zero-based index of the entry being read (or -1 for the header).
class TruncatedError : public FormatError {
 public:
  TruncatedError(const std::string& what, long long entry_index)
      : FormatError(what), entry_index_(entry_index) {}
  long long entry_index() const noexcept { return entry_index_; }

 private:
  long long entry_index_;
};

/// Declared sizes disagree with the bytes on disk (trailing garbage, etc).
class LengthMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DuplicateTokenError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// A single corpus line failed to parse.
class CorpusLineError : public FormatError {
 public:
  CorpusLineError(const std::string& what, std::size_t line)
      : FormatError(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace clickbait
