#pragma once

#include <stdexcept>
#include <string>

namespace mpqp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePath : Error {
  using Error::Error;
};

struct OutOfCorridor : Error {
  using Error::Error;
};

struct NoTraversablePath : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct ConfigParse : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct EmptyBatch : Error {
  using Error::Error;
};

}  // namespace mpqp
