#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "affectflow/acquisition.hpp"
#include "affectflow/classifiers.hpp"
#include "affectflow/data_model.hpp"
#include "affectflow/evaluation.hpp"
#include "affectflow/features.hpp"
#include "affectflow/labels.hpp"
#include "affectflow/preprocessing.hpp"
#include "affectflow/selection.hpp"

namespace affectflow {

enum class StageKind { Acquisition, Preprocessor, FeatureExtractor, LabelGenerator, FeatureSelector, Classification };

enum class PayloadType { None, SubjectBundle, FeatureMatrix, LabeledFeatures, PipelineOutput };

std::string to_string(StageKind kind);
std::string to_string(PayloadType type);

PayloadType stage_input(StageKind kind);
PayloadType stage_output(StageKind kind);

/// Index i holds the PayloadType with underlying value i.
using Payload = std::variant<std::monostate, SubjectBundle, FeatureMatrix, LabeledFeatures, PipelineOutput>;

PayloadType payload_type(const Payload& payload);

/// FNV-1a over a canonical byte encoding; doubles contribute their bit patterns.
std::uint64_t payload_digest(const Payload& payload);

/// Side reports gathered while running.
struct RunLog {
  std::vector<SkippedFile> skipped_files;
  std::vector<ExclusionRecord> excluded_subjects;
  std::vector<ExtractionIssue> extraction_issues;
  std::vector<DroppedRow> dropped_rows;
  std::vector<SelectionStep> selection;
};

struct RunContext {
  std::uint64_t seed = 0;
  bool strict = false;
  /// Self-report files found by acquisition, for report-based label rules.
  std::map<std::string, std::filesystem::path> report_files;
  RunLog log;
};

class Stage {
 public:
  virtual ~Stage() = default;
  virtual StageKind kind() const = 0;
  virtual std::string name() const { return to_string(kind()); }
  /// `input` always holds stage_input(kind()).
  virtual Payload run(Payload input, RunContext& context) const = 0;
};

using StagePtr = std::shared_ptr<const Stage>;

class AcquisitionStage : public Stage {
 public:
  std::filesystem::path root;
  std::vector<std::string> signal_types;
  std::optional<std::filesystem::path> registry_file;

  StageKind kind() const override { return StageKind::Acquisition; }
  Payload run(Payload input, RunContext& context) const override;
};

/// Acquisition from an in-memory bundle.
class BundleSourceStage : public Stage {
 public:
  SubjectBundle bundle;
  std::map<std::string, std::filesystem::path> report_files;

  StageKind kind() const override { return StageKind::Acquisition; }
  std::string name() const override { return "bundle-source"; }
  Payload run(Payload input, RunContext& context) const override;
};

class PreprocessorStage : public Stage {
 public:
  std::map<std::string, PreprocessChain> chains;  // missing modalities use default_chain
  PreprocessOptions options;

  StageKind kind() const override { return StageKind::Preprocessor; }
  Payload run(Payload input, RunContext& context) const override;
};

class FeatureExtractorStage : public Stage {
 public:
  std::vector<FeatureCatalogEntry> catalog;
  ExtractionConfig config;

  StageKind kind() const override { return StageKind::FeatureExtractor; }
  Payload run(Payload input, RunContext& context) const override;
};

class LabelGeneratorStage : public Stage {
 public:
  LabelRule rule;
  /// When empty, report-based rules read the files found by acquisition.
  std::vector<SelfReport> reports;

  StageKind kind() const override { return StageKind::LabelGenerator; }
  Payload run(Payload input, RunContext& context) const override;
};

/// One-hot encodes, drops incomplete rows, then runs forward selection.
class FeatureSelectorStage : public Stage {
 public:
  ClassifierSpec scorer;
  std::size_t k = 1;
  int cv_folds = 5;

  StageKind kind() const override { return StageKind::FeatureSelector; }
  Payload run(Payload input, RunContext& context) const override;
};

/// Drops incomplete rows, one-hot encodes, then trains, tests or cross-validates.
class ClassificationStage : public Stage {
 public:
  ClassificationMode mode = ClassificationMode::CrossValidate;
  std::vector<ClassifierSpec> models;
  CVStrategy strategy;
  std::vector<FittedModelHandle> fitted;  // mode Test only

  StageKind kind() const override { return StageKind::Classification; }
  Payload run(Payload input, RunContext& context) const override;
};

/// Any stage kind backed by a callable.
class CustomStage : public Stage {
 public:
  using Fn = std::function<Payload(Payload, RunContext&)>;

  CustomStage(StageKind kind, std::string name, Fn fn)
      : kind_(kind), name_(std::move(name)), fn_(std::move(fn)) {}

  StageKind kind() const override { return kind_; }
  std::string name() const override { return name_; }
  Payload run(Payload input, RunContext& context) const override { return fn_(std::move(input), context); }

 private:
  StageKind kind_;
  std::string name_;
  Fn fn_;
};

struct PipelineSpec {
  std::vector<StagePtr> stages;
  std::uint64_t seed = 0;
  bool strict = false;
  /// When set, every stage's output is written under this folder.
  std::optional<std::filesystem::path> checkpoint_dir;
};

/// Structural check of a stage-kind sequence, in this order:
/// MisorderedStage (a kind repeats or precedes one that must come first),
/// IncompatibleStages(i, i+1) (first mismatching pair), MissingStage.
void check_stage_order(const std::vector<StageKind>& kinds);

class Pipeline {
 public:
  const PipelineSpec& spec() const noexcept { return spec_; }

 private:
  explicit Pipeline(PipelineSpec spec) : spec_(std::move(spec)) {}
  friend Pipeline build_pipeline(PipelineSpec spec);
  PipelineSpec spec_;
};

Pipeline build_pipeline(PipelineSpec spec);

struct StageTrace {
  std::size_t index = 0;
  std::string name;
  StageKind kind{};
  std::uint64_t digest = 0;
};

struct PipelineRun {
  PipelineOutput output;
  RunLog log;
  std::vector<StageTrace> trace;
};

/// Runs the stages in order. A failing stage raises StageError carrying the
/// original kind, the stage index and the stage's message.
PipelineRun run_pipeline(const Pipeline& pipeline);

/// Text dumps used by checkpoints: feature matrices as CSV with a `label`
/// column for labeled data.
std::string format_feature_matrix_csv(const FeatureMatrix& matrix, const LabelVector* labels = nullptr);

}  // namespace affectflow
