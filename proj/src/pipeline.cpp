#include "affectflow/pipeline.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <set>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace affectflow {

namespace {

int rank(StageKind kind) { return static_cast<int>(kind); }

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void hash_matrix(Fnv1a& h, const FeatureMatrix& m) {
  h.u64(m.columns.size());
  for (const auto& c : m.columns) h.str(c);
  h.u64(m.rows.size());
  for (const auto& r : m.rows) {
    h.str(r.subject_id);
    h.str(r.phase);
    h.u64(r.window_index);
    for (const auto& v : r.values) {
      h.u64(v.index());
      if (const auto* d = std::get_if<double>(&v)) h.f64(*d);
      if (const auto* c = std::get_if<Category>(&v)) h.str(c->tag);
    }
  }
}

void hash_labels(Fnv1a& h, const LabelVector& y) {
  h.u64(y.labels.size());
  for (int l : y.labels) h.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(l)));
  for (const auto& [id, name] : y.class_names) {
    h.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(id)));
    h.str(name);
  }
}

std::string cell_text(const FeatureValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return csv::format_double(*d);
  if (const auto* c = std::get_if<Category>(&v)) return c->tag;
  return "";
}

const std::string& expect_type_name(PayloadType t) {
  static const std::array<std::string, 5> names{"none", "SubjectBundle", "FeatureMatrix", "LabeledFeatures",
                                                "PipelineOutput"};
  return names[static_cast<std::size_t>(t)];
}

void write_checkpoint(const std::filesystem::path& dir, std::size_t index, StageKind kind, const Payload& payload) {
  const std::string stem = "stage" + std::to_string(index) + "_" + to_string(kind);
  std::filesystem::create_directories(dir);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SubjectBundle>) {
          write_bundle(p, dir / stem);
        } else if constexpr (std::is_same_v<T, FeatureMatrix>) {
          csv::write_file((dir / (stem + ".csv")).string(), format_feature_matrix_csv(p));
        } else if constexpr (std::is_same_v<T, LabeledFeatures>) {
          csv::write_file((dir / (stem + ".csv")).string(), format_feature_matrix_csv(p.matrix, &p.labels));
        } else if constexpr (std::is_same_v<T, PipelineOutput>) {
          csv::write_file((dir / (stem + ".csv")).string(), format_report_csv(p.report));
        }
      },
      payload);
}

template <class T>
T take(Payload& payload) {
  return std::move(std::get<T>(payload));
}

}  // namespace

std::string to_string(StageKind kind) {
  switch (kind) {
    case StageKind::Acquisition: return "acquisition";
    case StageKind::Preprocessor: return "preprocessor";
    case StageKind::FeatureExtractor: return "feature-extractor";
    case StageKind::LabelGenerator: return "label-generator";
    case StageKind::FeatureSelector: return "feature-selector";
    case StageKind::Classification: return "classification";
  }
  return "?";
}

std::string to_string(PayloadType type) { return expect_type_name(type); }

PayloadType stage_input(StageKind kind) {
  switch (kind) {
    case StageKind::Acquisition: return PayloadType::None;
    case StageKind::Preprocessor:
    case StageKind::FeatureExtractor: return PayloadType::SubjectBundle;
    case StageKind::LabelGenerator: return PayloadType::FeatureMatrix;
    case StageKind::FeatureSelector:
    case StageKind::Classification: return PayloadType::LabeledFeatures;
  }
  return PayloadType::None;
}

PayloadType stage_output(StageKind kind) {
  switch (kind) {
    case StageKind::Acquisition:
    case StageKind::Preprocessor: return PayloadType::SubjectBundle;
    case StageKind::FeatureExtractor: return PayloadType::FeatureMatrix;
    case StageKind::LabelGenerator:
    case StageKind::FeatureSelector: return PayloadType::LabeledFeatures;
    case StageKind::Classification: return PayloadType::PipelineOutput;
  }
  return PayloadType::None;
}

PayloadType payload_type(const Payload& payload) { return static_cast<PayloadType>(payload.index()); }

std::uint64_t payload_digest(const Payload& payload) {
  Fnv1a h;
  h.u64(payload.index());
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SubjectBundle>) {
          for (const auto& [subject, list] : p.entries()) {
            h.str(subject);
            h.u64(list.size());
            for (const auto& s : list) {
              h.str(s.phase());
              h.str(s.modality().name);
              h.f64(s.sample_rate_hz());
              for (double t : s.timestamps()) h.f64(t);
              for (double v : s.values()) h.f64(v);
            }
          }
        } else if constexpr (std::is_same_v<T, FeatureMatrix>) {
          hash_matrix(h, p);
        } else if constexpr (std::is_same_v<T, LabeledFeatures>) {
          hash_matrix(h, p.matrix);
          hash_labels(h, p.labels);
        } else if constexpr (std::is_same_v<T, PipelineOutput>) {
          hash_labels(h, p.y_true);
          for (const auto& pred : p.y_pred) {
            h.u64(pred.size());
            for (int l : pred) h.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(l)));
          }
          for (const auto& model_scores : p.scores) {
            h.u64(model_scores.size());
            for (const auto& row : model_scores)
              for (double v : row) h.f64(v);
          }
          h.str(format_report_csv(p.report));
        }
      },
      payload);
  return h.value();
}

std::string format_feature_matrix_csv(const FeatureMatrix& matrix, const LabelVector* labels) {
  std::string out = "subject,phase,window";
  for (const auto& c : matrix.columns) out += "," + c;
  if (labels) out += ",label";
  out += "\n";
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    const auto& r = matrix.rows[i];
    out += r.subject_id + "," + r.phase + "," + std::to_string(r.window_index);
    for (const auto& v : r.values) out += "," + cell_text(v);
    if (labels) out += "," + std::to_string(labels->labels.at(i));
    out += "\n";
  }
  return out;
}

// ---- stages ----

Payload AcquisitionStage::run(Payload, RunContext& context) const {
  const auto registry = registry_file ? SignalRegistry::from_file(*registry_file) : SignalRegistry::builtin();
  const auto index = scan_dataset(root, registry);
  std::vector<Modality> types;
  for (const auto& name : signal_types) types.push_back(registry.at(name));
  if (types.empty()) fail(ErrorKind::InvalidArgument, "no signal types requested");
  auto result = acquire(index, types, AcquisitionOptions{context.strict});
  context.log.skipped_files.insert(context.log.skipped_files.end(), index.skipped.begin(), index.skipped.end());
  context.log.excluded_subjects.insert(context.log.excluded_subjects.end(), result.excluded.begin(),
                                       result.excluded.end());
  context.report_files = index.report_files;
  if (result.bundle.empty()) fail(ErrorKind::EmptyDataset, "every subject was excluded");
  return std::move(result.bundle);
}

Payload BundleSourceStage::run(Payload, RunContext& context) const {
  if (bundle.empty()) fail(ErrorKind::EmptyDataset, "bundle has no subjects");
  context.report_files = report_files;
  return bundle;
}

Payload PreprocessorStage::run(Payload input, RunContext&) const {
  return preprocess(take<SubjectBundle>(input), chains, options);
}

Payload FeatureExtractorStage::run(Payload input, RunContext& context) const {
  auto result = extract_features(take<SubjectBundle>(input), catalog, config);
  context.log.extraction_issues.insert(context.log.extraction_issues.end(), result.issues.begin(),
                                       result.issues.end());
  return std::move(result.matrix);
}

Payload LabelGeneratorStage::run(Payload input, RunContext& context) const {
  auto matrix = take<FeatureMatrix>(input);
  std::vector<SelfReport> loaded;
  const bool needs_reports =
      rule.kind == LabelRule::Kind::FixedThreshold || rule.kind == LabelRule::Kind::DynamicThreshold;
  if (needs_reports && reports.empty()) {
    std::set<std::string> subjects;
    for (const auto& r : matrix.rows) subjects.insert(r.subject_id);
    for (const auto& s : subjects) {
      const auto it = context.report_files.find(s);
      if (it == context.report_files.end()) {
        if (context.strict) fail(ErrorKind::MissingReport, "no self-report file for subject " + s);
        continue;
      }
      auto part = load_self_reports(it->second, s);
      loaded.insert(loaded.end(), part.begin(), part.end());
    }
  }
  auto result = attach_labels(matrix, rule, reports.empty() ? loaded : reports, context.strict);
  context.log.dropped_rows.insert(context.log.dropped_rows.end(), result.dropped.begin(), result.dropped.end());
  return std::move(result.data);
}

namespace {

LabeledFeatures complete_numeric_rows(LabeledFeatures data, RunContext& context) {
  data.matrix = one_hot_encode(data.matrix);
  auto dropped = drop_incomplete_rows(data);
  context.log.dropped_rows.insert(context.log.dropped_rows.end(), dropped.begin(), dropped.end());
  if (data.matrix.rows.empty()) fail(ErrorKind::TooFewRows, "no complete feature rows remain");
  return data;
}

}  // namespace

Payload FeatureSelectorStage::run(Payload input, RunContext& context) const {
  auto data = complete_numeric_rows(take<LabeledFeatures>(input), context);
  auto result = sequential_forward_selection(data.matrix, data.labels, scorer, k, cv_folds, context.seed);
  context.log.selection = result.steps;
  return LabeledFeatures{std::move(result.matrix), std::move(data.labels)};
}

Payload ClassificationStage::run(Payload input, RunContext& context) const {
  const auto data = complete_numeric_rows(take<LabeledFeatures>(input), context);
  switch (mode) {
    case ClassificationMode::Train:
      return train_models(models, data, context.seed);
    case ClassificationMode::Test:
      if (fitted.empty()) fail(ErrorKind::InvalidArgument, "test mode needs fitted models");
      return test_models(fitted, data);
    case ClassificationMode::CrossValidate:
      return cross_validate(models, data, strategy, context.seed);
  }
  fail(ErrorKind::InvalidArgument, "unknown classification mode");
}

// ---- engine ----

void check_stage_order(const std::vector<StageKind>& kinds) {
  for (std::size_t i = 1; i < kinds.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (kinds[j] == kinds[i]) {
        fail(ErrorKind::MisorderedStage, to_string(kinds[i]) + " appears at stages " + std::to_string(j) +
                                             " and " + std::to_string(i));
      }
      if (rank(kinds[j]) > rank(kinds[i])) {
        fail(ErrorKind::MisorderedStage, to_string(kinds[i]) + " at stage " + std::to_string(i) +
                                             " must come before " + to_string(kinds[j]) + " at stage " +
                                             std::to_string(j));
      }
    }
  }
  for (std::size_t i = 0; i + 1 < kinds.size(); ++i) {
    if (stage_output(kinds[i]) != stage_input(kinds[i + 1])) {
      fail(ErrorKind::IncompatibleStages,
           "stages " + std::to_string(i) + " and " + std::to_string(i + 1) + ": " + to_string(kinds[i]) +
               " produces " + to_string(stage_output(kinds[i])) + " but " + to_string(kinds[i + 1]) +
               " expects " + to_string(stage_input(kinds[i + 1])));
    }
  }
  for (StageKind required : {StageKind::Acquisition, StageKind::Preprocessor, StageKind::LabelGenerator,
                             StageKind::Classification}) {
    if (std::find(kinds.begin(), kinds.end(), required) == kinds.end()) {
      fail(ErrorKind::MissingStage, to_string(required) + " is required");
    }
  }
}

Pipeline build_pipeline(PipelineSpec spec) {
  std::vector<StageKind> kinds;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    if (!spec.stages[i]) fail(ErrorKind::InvalidArgument, "stage " + std::to_string(i) + " is null");
    kinds.push_back(spec.stages[i]->kind());
  }
  check_stage_order(kinds);
  return Pipeline(std::move(spec));
}

PipelineRun run_pipeline(const Pipeline& pipeline) {
  const auto& spec = pipeline.spec();
  RunContext context;
  context.seed = spec.seed;
  context.strict = spec.strict;
  PipelineRun run;
  Payload payload;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const auto& stage = *spec.stages[i];
    const auto name = stage.name();
    try {
      payload = stage.run(std::move(payload), context);
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(e.kind(), i, name, e.detail());
    } catch (const std::exception& e) {
      throw StageError(ErrorKind::InvalidArgument, i, name, e.what());
    }
    if (payload_type(payload) != stage_output(stage.kind())) {
      throw StageError(ErrorKind::IncompatibleStages, i, name,
                       "produced " + to_string(payload_type(payload)) + ", expected " +
                           to_string(stage_output(stage.kind())));
    }
    run.trace.push_back(StageTrace{i, name, stage.kind(), payload_digest(payload)});
    if (spec.checkpoint_dir) {
      try {
        write_checkpoint(*spec.checkpoint_dir, i, stage.kind(), payload);
      } catch (const std::exception& e) {
        throw StageError(ErrorKind::IOFailure, i, name, std::string("checkpoint: ") + e.what());
      }
    }
  }
  run.output = std::move(std::get<PipelineOutput>(payload));
  run.log = std::move(context.log);
  return run;
}

}  // namespace affectflow
