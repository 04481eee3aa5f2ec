#pragma once

#include <stdexcept>
#include <string>

namespace cicda {

// Root of every error the library throws. Callers that only care about
// "something in cicda failed" catch this; the subclasses below name the
// specific contract that was violated.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CICDA_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

CICDA_DEFINE_ERROR(ShapeMismatch);
CICDA_DEFINE_ERROR(SingularMatrix);
CICDA_DEFINE_ERROR(EmptyInput);
CICDA_DEFINE_ERROR(EmptyBatch);
CICDA_DEFINE_ERROR(EmptyDataset);
CICDA_DEFINE_ERROR(EmptyRegion);
CICDA_DEFINE_ERROR(UnknownPreset);
CICDA_DEFINE_ERROR(SingularConfusion);
CICDA_DEFINE_ERROR(DegenerateClass);
CICDA_DEFINE_ERROR(ConfigError);
CICDA_DEFINE_ERROR(IoError);

#undef CICDA_DEFINE_ERROR

}  // namespace cicda
