#pragma once

#include <stdexcept>
#include <string>

namespace dfx {

// Error category drives the CLI exit code: validation -> 3, runtime -> 1.
enum class ErrorCategory { Validation, Runtime };

class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorCategory cat, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)), cat_(cat) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return cat_; }

 private:
  std::string kind_;
  ErrorCategory cat_;
};

#define DFX_DEFINE_ERROR(NAME, CATEGORY)                                \
  class NAME : public ::dfx::Error {                                    \
   public:                                                              \
    explicit NAME(const std::string& msg)                               \
        : ::dfx::Error(#NAME, ::dfx::ErrorCategory::CATEGORY, msg) {}   \
  }

// data-pipeline
DFX_DEFINE_ERROR(UnreadableImage, Runtime);
DFX_DEFINE_ERROR(EmptyCorpus, Validation);
DFX_DEFINE_ERROR(BadFractions, Validation);
DFX_DEFINE_ERROR(TooFewRecords, Validation);
DFX_DEFINE_ERROR(MissingClass, Validation);
DFX_DEFINE_ERROR(InsufficientOthers, Validation);
DFX_DEFINE_ERROR(EncodeFailure, Runtime);
DFX_DEFINE_ERROR(InsufficientPool, Validation);
DFX_DEFINE_ERROR(BadManifest, Validation);

// nn-substrate
DFX_DEFINE_ERROR(ShapeMismatch, Validation);
DFX_DEFINE_ERROR(KernelTooLarge, Validation);
DFX_DEFINE_ERROR(EmptyBatch, Validation);
DFX_DEFINE_ERROR(NoGraph, Validation);
DFX_DEFINE_ERROR(MissingGradient, Validation);
DFX_DEFINE_ERROR(BadCheckpoint, Runtime);

// backbone / basemodel / fusion
DFX_DEFINE_ERROR(BadConfig, Validation);
DFX_DEFINE_ERROR(NotFinalized, Validation);
DFX_DEFINE_ERROR(MissingOtherClass, Validation);
DFX_DEFINE_ERROR(DivergedLoss, Runtime);
DFX_DEFINE_ERROR(NotFrozenBase, Validation);
DFX_DEFINE_ERROR(LengthMismatch, Validation);
DFX_DEFINE_ERROR(InputTooShort, Validation);

// evaluation
DFX_DEFINE_ERROR(EmptyMatrix, Validation);
DFX_DEFINE_ERROR(WrongShape, Validation);
DFX_DEFINE_ERROR(EmptyTestSet, Validation);
DFX_DEFINE_ERROR(EmptyBench, Validation);
DFX_DEFINE_ERROR(IoFailure, Runtime);

#undef DFX_DEFINE_ERROR

}  // namespace dfx
