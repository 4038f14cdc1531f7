#pragma once

#include <stdexcept>
#include <string>

namespace aact {

// Base for every error raised by the library. Each failure mode named by a
// component contract gets its own type so callers can catch precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define AACT_DEFINE_ERROR(Name)                 \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

// alert_core
class MissingField : public Error {
public:
    explicit MissingField(std::string field)
        : Error("missing field: " + field), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};
AACT_DEFINE_ERROR(MalformedTimestamp);
AACT_DEFINE_ERROR(EmptyCategory);

// feature store
AACT_DEFINE_ERROR(LatenessExceeded);
AACT_DEFINE_ERROR(DuplicateResolution);
AACT_DEFINE_ERROR(DuplicateAlert);
AACT_DEFINE_ERROR(UnknownAlert);
AACT_DEFINE_ERROR(CorruptCheckpoint);

// classifier
AACT_DEFINE_ERROR(DegenerateLabels);
AACT_DEFINE_ERROR(EmptyData);
AACT_DEFINE_ERROR(DimensionMismatch);
AACT_DEFINE_ERROR(UnsupportedModel);
AACT_DEFINE_ERROR(VersionMismatch);
AACT_DEFINE_ERROR(CorruptArtifact);

// evaluation
AACT_DEFINE_ERROR(TooFewRows);
AACT_DEFINE_ERROR(LengthMismatch);
AACT_DEFINE_ERROR(EmptyInput);
AACT_DEFINE_ERROR(MalformedRecord);

// triage service
AACT_DEFINE_ERROR(ModelUnavailable);
AACT_DEFINE_ERROR(StoreLagging);
AACT_DEFINE_ERROR(ValidationRegression);

#undef AACT_DEFINE_ERROR

}  // namespace aact
