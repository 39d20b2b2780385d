#pragma once

#include <stdexcept>
#include <string>

namespace drift {

/// Base of every error raised by the library. Each failure mode named in the
/// module contracts has its own subclass so callers can catch precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define DRIFT_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

// uitree
DRIFT_DEFINE_ERROR(MalformedDocument);
DRIFT_DEFINE_ERROR(SchemaViolation);
DRIFT_DEFINE_ERROR(CycleDetected);

// featurize / env
DRIFT_DEFINE_ERROR(EmptyCorpus);
DRIFT_DEFINE_ERROR(NodeNotInState);
DRIFT_DEFINE_ERROR(UnknownEvent);
DRIFT_DEFINE_ERROR(NotReset);
DRIFT_DEFINE_ERROR(InvalidAppSpec);

// data
DRIFT_DEFINE_ERROR(CollectionBudgetExceeded);
DRIFT_DEFINE_ERROR(ObjectiveNotMet);
DRIFT_DEFINE_ERROR(NoQualifyingEpisodes);
DRIFT_DEFINE_ERROR(TooFewEpisodes);

// nn
DRIFT_DEFINE_ERROR(ShapeMismatch);
DRIFT_DEFINE_ERROR(NonFiniteInput);
DRIFT_DEFINE_ERROR(NonFiniteLoss);
DRIFT_DEFINE_ERROR(FingerprintMismatch);

// policy / eval
DRIFT_DEFINE_ERROR(NoActions);
DRIFT_DEFINE_ERROR(UnreachableObjective);

// cli
DRIFT_DEFINE_ERROR(ConfigError);
DRIFT_DEFINE_ERROR(IoError);

#undef DRIFT_DEFINE_ERROR

}  // namespace drift
