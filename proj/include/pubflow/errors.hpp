#pragma once

#include <stdexcept>
#include <string>

namespace pubflow {

// Base for every error the engine raises. Each subclass names one failure
// mode so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PUBFLOW_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

// workflow model
PUBFLOW_DEFINE_ERROR(SyntaxError)
PUBFLOW_DEFINE_ERROR(SchemaError)
PUBFLOW_DEFINE_ERROR(UnknownId)
PUBFLOW_DEFINE_ERROR(GuardFailed)
PUBFLOW_DEFINE_ERROR(HeadMismatch)
PUBFLOW_DEFINE_ERROR(StateError)
PUBFLOW_DEFINE_ERROR(ValidationError)

// bus
PUBFLOW_DEFINE_ERROR(UnknownChannel)
PUBFLOW_DEFINE_ERROR(UnknownActor)

// execution models
PUBFLOW_DEFINE_ERROR(UnknownKernel)
PUBFLOW_DEFINE_ERROR(MissingInput)
PUBFLOW_DEFINE_ERROR(InvalidStage)
PUBFLOW_DEFINE_ERROR(FormatError)

// numerics
PUBFLOW_DEFINE_ERROR(InvalidGeometry)
PUBFLOW_DEFINE_ERROR(InvalidParams)
PUBFLOW_DEFINE_ERROR(SingularSystem)
PUBFLOW_DEFINE_ERROR(HaloMissing)

// logs
PUBFLOW_DEFINE_ERROR(MalformedLog)

#undef PUBFLOW_DEFINE_ERROR

}  // namespace pubflow
