#pragma once

#include <stdexcept>
#include <string>

namespace jlp {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define JLP_DEFINE_ERROR(NAME)            \
  class NAME : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

// Data ingestion / validation
JLP_DEFINE_ERROR(MissingColumn)
JLP_DEFINE_ERROR(UnknownSubject)
JLP_DEFINE_ERROR(ValueOutOfRange)
JLP_DEFINE_ERROR(ObservationAfterEvent)
JLP_DEFINE_ERROR(UnknownCovariate)

// Measurement models
JLP_DEFINE_ERROR(DegenerateScale)
JLP_DEFINE_ERROR(OutOfSupport)
JLP_DEFINE_ERROR(ThresholdOrderViolation)
JLP_DEFINE_ERROR(WrongMarkerNature)

// Survival
JLP_DEFINE_ERROR(NonPositiveTime)
JLP_DEFINE_ERROR(DimensionMismatch)

// Likelihood / estimation
JLP_DEFINE_ERROR(NumericalUnderflow)
JLP_DEFINE_ERROR(ConstraintViolation)
JLP_DEFINE_ERROR(NonFiniteObjective)
JLP_DEFINE_ERROR(SingularHessian)
JLP_DEFINE_ERROR(NoCovariance)
JLP_DEFINE_ERROR(NoConvergence)

// Configuration / CLI
JLP_DEFINE_ERROR(ConfigError)

#undef JLP_DEFINE_ERROR

}  // namespace jlp
