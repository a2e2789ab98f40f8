#pragma once

#include <stdexcept>
#include <string>

namespace uniqcert {

// Root of every error thrown by the library. The CLI maps each leaf to an
// exit code >= 64.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define UNIQCERT_DEFINE_ERROR(Name)                                     \
    class Name : public Error {                                         \
      public:                                                           \
        explicit Name(const std::string& what) : Error(what) {}         \
        const char* kind() const noexcept override { return #Name; }    \
    };

UNIQCERT_DEFINE_ERROR(FormatError)
UNIQCERT_DEFINE_ERROR(NonUniformGridError)
UNIQCERT_DEFINE_ERROR(IncompleteGridError)
UNIQCERT_DEFINE_ERROR(IoError)
UNIQCERT_DEFINE_ERROR(ValidationError)
UNIQCERT_DEFINE_ERROR(UnknownCaseError)
UNIQCERT_DEFINE_ERROR(ParameterError)
UNIQCERT_DEFINE_ERROR(OrderError)
UNIQCERT_DEFINE_ERROR(GridTooSmallError)
UNIQCERT_DEFINE_ERROR(DomainError)
UNIQCERT_DEFINE_ERROR(FeatureEvaluationError)
UNIQCERT_DEFINE_ERROR(ShapeError)
UNIQCERT_DEFINE_ERROR(SelectorError)
UNIQCERT_DEFINE_ERROR(ConfigError)

#undef UNIQCERT_DEFINE_ERROR

}  // namespace uniqcert
