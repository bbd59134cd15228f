#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectflow/classifiers.hpp"
#include "affectflow/data_model.hpp"

namespace affectflow {

struct CVStrategy {
  enum class Kind { KFold, StratifiedKFold, LOSO };
  Kind kind = Kind::KFold;
  int folds = 5;
  std::uint64_t shuffle_seed = 0;
};

std::string to_string(CVStrategy::Kind kind);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;  // ascending
};

/// LOSO: one fold per distinct subject (sorted by id); throws TooFewSubjects
/// with fewer than two. k-fold: seeded shuffle, fold sizes differ by at most
/// one; throws TooFewRows when rows < folds. Stratified k-fold deals each
/// class's shuffled rows round-robin and needs `labels`.
std::vector<Fold> make_folds(const CVStrategy& strategy, const FeatureMatrix& rows,
                             const LabelVector* labels = nullptr);

/// Deterministic across platforms: mt19937_64 output reduced without the
/// implementation-defined standard distributions.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  std::optional<double> auc;
};

/// Rank-based (Mann-Whitney) area under the ROC curve, ties counted half,
/// which equals the trapezoidal ROC area. Throws AUCUndefined when only one
/// class is present, LengthMismatch on unequal lengths.
double binary_auc(std::span<const int> y_true, std::span<const double> positive_scores, int positive_class);

/// `classes` is the label universe for macro F1; a class with neither
/// instances nor predictions contributes 0. AUC is computed only for binary
/// problems (two classes in `prediction.classes`) with scores.
Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const int> classes = {},
                const Prediction* prediction = nullptr);

struct FoldMetrics {
  std::string fold;  // "0", "1", ... or "train" / "test"
  Metrics values;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;  // folds where the metric is defined
};

struct ModelReport {
  std::string model;
  std::vector<FoldMetrics> folds;
  std::vector<std::pair<std::string, MetricSummary>> aggregate;  // accuracy, f1_micro, f1_macro, auc
};

struct EvaluationReport {
  std::string mode;      // train | test | cross-validation
  std::string strategy;  // kfold | stratified-kfold | loso | none
  std::vector<ModelReport> models;
};

struct PipelineOutput {
  std::vector<FittedModelHandle> fitted_models;
  LabelVector y_true;
  std::vector<std::vector<int>> y_pred;                          // per model
  std::vector<std::vector<std::vector<double>>> scores;          // per model, empty when undefined
  std::vector<FeatureRow> row_keys;                              // identity of each y_true entry (values empty)
  EvaluationReport report;
};

enum class ClassificationMode { Train = 0, Test = 1, CrossValidate = 2 };

std::string to_string(ClassificationMode mode);

/// Mode 2. Per model and fold: fit on train rows, predict the test rows,
/// score. y_true / y_pred are concatenated in fold order; fitted_models are
/// refit on every row.
PipelineOutput cross_validate(std::span<const ClassifierSpec> specs, const LabeledFeatures& data,
                              const CVStrategy& strategy, std::uint64_t seed = 0);

/// Mode 0: fit on every row and report training-set metrics.
PipelineOutput train_models(std::span<const ClassifierSpec> specs, const LabeledFeatures& data,
                            std::uint64_t seed = 0);

/// Mode 1: score previously fitted models on `data`.
PipelineOutput test_models(std::span<const FittedModelHandle> models, const LabeledFeatures& data);

/// Human-readable per-fold table plus aggregate rows.
std::string format_report_text(const EvaluationReport& report);

/// Flat CSV `model,fold,metric,value`; aggregate rows use fold "mean" / "std".
/// Values use shortest round-trip formatting so reruns are byte-identical.
std::string format_report_csv(const EvaluationReport& report);

}  // namespace affectflow
