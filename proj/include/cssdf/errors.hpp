#pragma once

#include <stdexcept>
#include <string>

namespace cssdf {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidInput,
  kDegenerateGradient,
  kEmptyIndex,
  kBoundaryNotBracketed,
  kZeroDistance,
  kOutOfBounds,
  kClassMissing,
  kRange,
  kIo,
  kSchema,
  kVersionMismatch,
  kDivergence,
  kPlanningFailed,
  kOptimization,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CSSDF_DEFINE_ERROR(Name, Kind)                                \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}     \
  };

CSSDF_DEFINE_ERROR(InvalidInputError, ErrorKind::kInvalidInput)
CSSDF_DEFINE_ERROR(DegenerateGradientError, ErrorKind::kDegenerateGradient)
CSSDF_DEFINE_ERROR(EmptyIndexError, ErrorKind::kEmptyIndex)
CSSDF_DEFINE_ERROR(BoundaryNotBracketedError, ErrorKind::kBoundaryNotBracketed)
CSSDF_DEFINE_ERROR(ZeroDistanceError, ErrorKind::kZeroDistance)
CSSDF_DEFINE_ERROR(OutOfBoundsError, ErrorKind::kOutOfBounds)
CSSDF_DEFINE_ERROR(ClassMissingError, ErrorKind::kClassMissing)
CSSDF_DEFINE_ERROR(RangeError, ErrorKind::kRange)
CSSDF_DEFINE_ERROR(IoError, ErrorKind::kIo)
CSSDF_DEFINE_ERROR(SchemaError, ErrorKind::kSchema)
CSSDF_DEFINE_ERROR(VersionMismatchError, ErrorKind::kVersionMismatch)
CSSDF_DEFINE_ERROR(DivergenceError, ErrorKind::kDivergence)
CSSDF_DEFINE_ERROR(PlanningFailedError, ErrorKind::kPlanningFailed)
CSSDF_DEFINE_ERROR(OptimizationError, ErrorKind::kOptimization)

#undef CSSDF_DEFINE_ERROR

}  // namespace cssdf
