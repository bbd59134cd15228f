#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace affectflow {

/// One registered signal type. Names are canonical upper-case ("ECG", "EDA").
struct Modality {
  std::string name;
  std::string unit;
  std::optional<double> default_sample_rate_hz;

  friend bool operator==(const Modality& a, const Modality& b) { return a.name == b.name; }
};

std::string canonical_modality_name(std::string_view name);

/// One modality's samples for one subject-phase. Timestamps are seconds
/// relative to recording start.
class TimeSeries {
 public:
  TimeSeries() = default;

  /// sample_rate_hz <= 0 means "derive from the median timestamp delta".
  TimeSeries(std::string subject_id, std::string phase, Modality modality,
             std::vector<double> timestamps, std::vector<double> values,
             double sample_rate_hz = 0.0);

  /// Uniform grid t0 + k / fs for k in [0, values.size()).
  static TimeSeries uniform(std::string subject_id, std::string phase, Modality modality,
                            double t0, double fs, std::vector<double> values);

  const std::string& subject_id() const noexcept { return subject_id_; }
  const std::string& phase() const noexcept { return phase_; }
  const Modality& modality() const noexcept { return modality_; }
  std::span<const double> timestamps() const noexcept { return timestamps_; }
  std::span<const double> values() const noexcept { return values_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Duration covered by the samples, n / fs for a uniform series.
  double duration_s() const noexcept;

  /// True when every timestamp delta is 1/fs within `rel_tol`.
  bool is_uniform(double rel_tol = 1e-6) const noexcept;

  /// Same identity and timestamps, new values (length must match).
  TimeSeries with_values(std::vector<double> values) const;

 private:
  std::string subject_id_;
  std::string phase_;
  Modality modality_;
  std::vector<double> timestamps_;
  std::vector<double> values_;
  double sample_rate_hz_ = 0.0;
};

struct Violation {
  std::string what;
  std::optional<std::size_t> index;

  std::string describe() const;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string describe() const;
};

ValidationResult validate_time_series(const TimeSeries& series);

/// Throws ValidationFailed with every violation when `series` is invalid.
void require_valid(const TimeSeries& series);

/// subject_id -> that subject's series across phases and modalities.
class SubjectBundle {
 public:
  using Entries = std::map<std::string, std::vector<TimeSeries>>;

  SubjectBundle() = default;

  /// Throws DuplicateEntry when (phase, modality) already exists for the subject.
  void add(TimeSeries series);

  /// Disjoint-subject union; throws DuplicateEntry on overlapping subjects.
  SubjectBundle merged(const SubjectBundle& other) const;

  const Entries& entries() const noexcept { return entries_; }
  std::size_t subject_count() const noexcept { return entries_.size(); }
  std::size_t series_count() const noexcept;
  bool empty() const noexcept { return entries_.empty(); }

  const TimeSeries* find(const std::string& subject, const std::string& phase,
                         const std::string& modality) const;

  /// Phases in first-seen order for one subject.
  std::vector<std::string> phases_of(const std::string& subject) const;

 private:
  Entries entries_;
};

struct Category {
  std::string tag;
  friend bool operator==(const Category&, const Category&) = default;
};

/// A feature cell: absent (failed extraction), numeric, or categorical.
using FeatureValue = std::variant<std::monostate, double, Category>;

inline bool is_absent(const FeatureValue& v) { return std::holds_alternative<std::monostate>(v); }
inline bool is_numeric(const FeatureValue& v) { return std::holds_alternative<double>(v); }
inline bool is_categorical(const FeatureValue& v) { return std::holds_alternative<Category>(v); }

struct FeatureRow {
  std::string subject_id;
  std::string phase;
  std::size_t window_index = 0;
  std::vector<FeatureValue> values;
};

struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<FeatureRow> rows;

  std::size_t column_index(const std::string& name) const;  // throws InvalidArgument
  bool column_is_categorical(std::size_t column) const;
  bool fully_numeric() const;
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  FeatureMatrix select_columns(std::span<const std::size_t> indices) const;
};

ValidationResult validate_feature_matrix(const FeatureMatrix& matrix);

struct LabelVector {
  std::vector<int> labels;
  std::map<int, std::string> class_names;

  LabelVector select(std::span<const std::size_t> indices) const;
};

ValidationResult validate_labels(const LabelVector& labels, const FeatureMatrix& matrix);

struct LabeledFeatures {
  FeatureMatrix matrix;
  LabelVector labels;
};

/// Rows dropped by a stage, with the reason. Collected into run reports.
struct DroppedRow {
  std::string subject_id;
  std::string phase;
  std::size_t window_index = 0;
  std::string reason;
};

/// Drops rows holding any absent cell, returning what was dropped.
std::vector<DroppedRow> drop_incomplete_rows(LabeledFeatures& data);

}  // namespace affectflow
