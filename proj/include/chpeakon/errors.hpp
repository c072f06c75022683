#pragma once

#include <stdexcept>
#include <string>

namespace chpeakon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CHPEAKON_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

CHPEAKON_DEFINE_ERROR(InvalidState);
CHPEAKON_DEFINE_ERROR(DomainError);
CHPEAKON_DEFINE_ERROR(QuadratureFailure);
CHPEAKON_DEFINE_ERROR(DegenerateState);
CHPEAKON_DEFINE_ERROR(StepSizeUnderflow);
CHPEAKON_DEFINE_ERROR(SimultaneousCollision);
CHPEAKON_DEFINE_ERROR(BadCollisionData);
CHPEAKON_DEFINE_ERROR(NotYetSeparated);
CHPEAKON_DEFINE_ERROR(SpectatorOverlap);
CHPEAKON_DEFINE_ERROR(ContinuationStalled);
CHPEAKON_DEFINE_ERROR(BudgetExceeded);
CHPEAKON_DEFINE_ERROR(CollisionDuringStabilityRun);
CHPEAKON_DEFINE_ERROR(ConfigError);

#undef CHPEAKON_DEFINE_ERROR

}  // namespace chpeakon
