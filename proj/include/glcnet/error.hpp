#pragma once

#include <stdexcept>
#include <string>

namespace glcnet {

// Error categories map one-to-one onto the C API status codes.
enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kFormat = 3,
  kNumeric = 4,
  kState = 5,
  kInternal = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::kInvalidArgument, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorCode::kFormat, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorCode::kNumeric, what) {}
};

struct StateError : Error {
  explicit StateError(const std::string& what) : Error(ErrorCode::kState, what) {}
};

}  // namespace glcnet
