#pragma once

#include <stdexcept>
#include <string>

namespace tqa {

// Base for all harness errors. `code()` is a stable machine-readable
// identifier; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define TQA_DEFINE_ERROR(NAME)                          \
  class NAME : public Error {                           \
   public:                                              \
    explicit NAME(const std::string& message)           \
        : Error(#NAME, message) {}                      \
  }

// table
TQA_DEFINE_ERROR(MalformedTable);
TQA_DEFINE_ERROR(RaggedRows);
TQA_DEFINE_ERROR(ColumnNotFound);
TQA_DEFINE_ERROR(NoMatchingRow);
TQA_DEFINE_ERROR(NonNumericAggregate);

// dataset
TQA_DEFINE_ERROR(FileUnreadable);
TQA_DEFINE_ERROR(NOutOfRange);

// strategy
TQA_DEFINE_ERROR(MismatchedAblation);
TQA_DEFINE_ERROR(TemplateInvalid);

// backend
TQA_DEFINE_ERROR(NetworkError);
TQA_DEFINE_ERROR(AuthError);
TQA_DEFINE_ERROR(ContextOverflow);
TQA_DEFINE_ERROR(UnrecognizedToyQuestion);

// metrics
TQA_DEFINE_ERROR(LengthMismatch);
TQA_DEFINE_ERROR(EmptyScores);
TQA_DEFINE_ERROR(UnknownCategory);

// runner
TQA_DEFINE_ERROR(IdMismatch);
TQA_DEFINE_ERROR(RunError);

#undef TQA_DEFINE_ERROR

}  // namespace tqa
