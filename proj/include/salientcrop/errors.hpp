// Error types thrown across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace salientcrop {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public Error {
public:
  using Error::Error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class ImageTooSmall : public Error {
public:
  using Error::Error;
};

class InsufficientData : public Error {
public:
  using Error::Error;
};

class MissingClass : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class NoFeatures : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

class CorruptArchive : public Error {
public:
  using Error::Error;
};

class ManifestError : public Error {
public:
  using Error::Error;
};

}  // namespace salientcrop
