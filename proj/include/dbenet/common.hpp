#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbenet {

// Base class for everything thrown by this library. CLI maps subclasses to
// exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Tensor shape incompatibility; message names both shapes.
class ShapeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyInput : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Kabsch on <3 pairs or a rank-deficient cross-covariance.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Mining produced no positive pairs for a cloud pair.
class EmptyPositives : public Error {
 public:
  using Error::Error;
};

// File-format problems (PLY, checkpoint, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Weight transfer failed (shape mismatch on a scoped tensor).
class TransferError : public Error {
 public:
  using Error::Error;
};

// Synthetic pair generation could not reach the requested overlap.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// RANSAC fed fewer correspondences than the sample size.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

inline std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace dbenet
