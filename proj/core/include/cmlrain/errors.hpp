#pragma once

#include <stdexcept>
#include <string>

namespace cmlrain {

// Base class for all toolkit errors. The CLI maps subclasses onto exit
// codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class NumericError : public Error {
public:
  using Error::Error;
};

#define CMLRAIN_ERROR(Name, Base)                    \
  class Name : public Base {                         \
  public:                                            \
    explicit Name(const std::string& msg)            \
        : Base(std::string(#Name) + ": " + msg) {}   \
  }

// ingest
CMLRAIN_ERROR(MalformedHeader, DataError);
CMLRAIN_ERROR(NonMonotonicTimestamps, DataError);
CMLRAIN_ERROR(EmptyFile, DataError);
CMLRAIN_ERROR(ResolutionViolation, DataError);

// preprocess
CMLRAIN_ERROR(WrongStep, DataError);
CMLRAIN_ERROR(TooSparse, DataError);
CMLRAIN_ERROR(EmptyColumn, DataError);
CMLRAIN_ERROR(OverlappingSplits, ConfigError);
CMLRAIN_ERROR(BufferTooSmall, ConfigError);

// autodiff / model
CMLRAIN_ERROR(ShapeMismatch, NumericError);
CMLRAIN_ERROR(InvalidAxis, NumericError);
CMLRAIN_ERROR(NonScalarLoss, NumericError);
CMLRAIN_ERROR(LengthMismatch, NumericError);
CMLRAIN_ERROR(SpecMismatch, ConfigError);

// train
CMLRAIN_ERROR(EmptySplit, DataError);
CMLRAIN_ERROR(DivergedLoss, NumericError);

// pl_baseline
CMLRAIN_ERROR(WindowTooLong, ConfigError);
CMLRAIN_ERROR(NoDryPeriod, DataError);
CMLRAIN_ERROR(MissingCoefficient, ConfigError);

// eval / cli
CMLRAIN_ERROR(DegenerateVariance, NumericError);
CMLRAIN_ERROR(IoFailure, DataError);
CMLRAIN_ERROR(ConfigInvalid, ConfigError);
CMLRAIN_ERROR(MissingInput, DataError);

#undef CMLRAIN_ERROR

}  // namespace cmlrain
