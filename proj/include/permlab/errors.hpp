#pragma once

#include <stdexcept>
#include <string>

namespace permlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed numeric text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-square or ragged matrix input.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input exceeds a computational guard (n too large, class too large).
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

/// A formula's hypothesis is not met (division by r-1, r_low below threshold, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (bad permutation, nonpositive scale, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// I/O failure.
class FileError : public Error {
 public:
  using Error::Error;
};

}  // namespace permlab
