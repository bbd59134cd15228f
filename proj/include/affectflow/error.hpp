#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace affectflow {

enum class ErrorKind {
  // data model / acquisition
  InvalidArgument,
  ValidationFailed,
  EmptyDataset,
  IOFailure,
  MissingHeader,
  NonNumericCell,
  DuplicateEntry,
  ExcludedSubject,
  NonUniformSeries,
  // pipeline engine
  IncompatibleStages,
  MissingStage,
  MisorderedStage,
  // preprocessing
  CutoffOutOfRange,
  InvalidOrder,
  SampleRateMismatch,
  UnknownModality,
  // features
  SeriesTooShort,
  NoBeatsDetected,
  TooFewBeats,
  DegenerateSpectrum,
  TooFewSamples,
  NoBreathsDetected,
  SampleRateTooLow,
  UnknownFeature,
  // labels / selection
  UnmappedPhase,
  WrongQuestionnaire,
  InsufficientReports,
  MissingReport,
  InvalidReport,
  KTooLarge,
  // classification
  SingleClass,
  NonNumericFeature,
  SchemaMismatch,
  TooFewSubjects,
  TooFewRows,
  LengthMismatch,
  AUCUndefined,
  // synthetic data
  InvalidRate,
  SCROutOfRange,
  // configuration
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind()` is stable and is what callers
/// and tests dispatch on; the message carries human context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Raised by the pipeline engine when a stage fails at run time. Wraps the
/// original kind so callers can still dispatch on it.
class StageError : public Error {
 public:
  StageError(ErrorKind kind, std::size_t stage_index, std::string stage_name,
             const std::string& message)
      : Error(kind, "stage " + std::to_string(stage_index) + " (" + stage_name + "): " + message),
        stage_index_(stage_index),
        stage_name_(std::move(stage_name)) {}

  std::size_t stage_index() const noexcept { return stage_index_; }
  const std::string& stage_name() const noexcept { return stage_name_; }

 private:
  std::size_t stage_index_;
  std::string stage_name_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace affectflow
