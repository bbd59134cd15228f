#include "affectflow/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <tuple>
#include <sstream>

#include "affectflow/error.hpp"

namespace affectflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::IOFailure: return "IOFailure";
    case ErrorKind::MissingHeader: return "MissingHeader";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::DuplicateEntry: return "DuplicateEntry";
    case ErrorKind::ExcludedSubject: return "ExcludedSubject";
    case ErrorKind::NonUniformSeries: return "NonUniformSeries";
    case ErrorKind::IncompatibleStages: return "IncompatibleStages";
    case ErrorKind::MissingStage: return "MissingStage";
    case ErrorKind::MisorderedStage: return "MisorderedStage";
    case ErrorKind::CutoffOutOfRange: return "CutoffOutOfRange";
    case ErrorKind::InvalidOrder: return "InvalidOrder";
    case ErrorKind::SampleRateMismatch: return "SampleRateMismatch";
    case ErrorKind::UnknownModality: return "UnknownModality";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::NoBeatsDetected: return "NoBeatsDetected";
    case ErrorKind::TooFewBeats: return "TooFewBeats";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NoBreathsDetected: return "NoBreathsDetected";
    case ErrorKind::SampleRateTooLow: return "SampleRateTooLow";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::UnmappedPhase: return "UnmappedPhase";
    case ErrorKind::WrongQuestionnaire: return "WrongQuestionnaire";
    case ErrorKind::InsufficientReports: return "InsufficientReports";
    case ErrorKind::MissingReport: return "MissingReport";
    case ErrorKind::InvalidReport: return "InvalidReport";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NonNumericFeature: return "NonNumericFeature";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::TooFewSubjects: return "TooFewSubjects";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::AUCUndefined: return "AUCUndefined";
    case ErrorKind::InvalidRate: return "InvalidRate";
    case ErrorKind::SCROutOfRange: return "SCROutOfRange";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::string canonical_modality_name(std::string_view name) {
  std::string out(name);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

namespace {

double median_delta(std::span<const double> t) {
  if (t.size() < 2) return 0.0;
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) d[i] = t[i + 1] - t[i];
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  double upper = *mid;
  double lower = *std::max_element(d.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

TimeSeries::TimeSeries(std::string subject_id, std::string phase, Modality modality,
                       std::vector<double> timestamps, std::vector<double> values,
                       double sample_rate_hz)
    : subject_id_(std::move(subject_id)),
      phase_(std::move(phase)),
      modality_(std::move(modality)),
      timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      sample_rate_hz_(sample_rate_hz) {
  if (sample_rate_hz_ <= 0.0) {
    double d = median_delta(timestamps_);
    sample_rate_hz_ = d > 0.0 ? 1.0 / d : 0.0;
  }
}

TimeSeries TimeSeries::uniform(std::string subject_id, std::string phase, Modality modality,
                               double t0, double fs, std::vector<double> values) {
  std::vector<double> t(values.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = t0 + static_cast<double>(k) / fs;
  return TimeSeries(std::move(subject_id), std::move(phase), std::move(modality), std::move(t),
                    std::move(values), fs);
}

double TimeSeries::duration_s() const noexcept {
  if (timestamps_.empty() || sample_rate_hz_ <= 0.0) return 0.0;
  return timestamps_.back() - timestamps_.front() + 1.0 / sample_rate_hz_;
}

bool TimeSeries::is_uniform(double rel_tol) const noexcept {
  if (sample_rate_hz_ <= 0.0) return false;
  const double dt = 1.0 / sample_rate_hz_;
  for (std::size_t i = 0; i + 1 < timestamps_.size(); ++i) {
    if (std::abs((timestamps_[i + 1] - timestamps_[i]) - dt) > rel_tol * dt) return false;
  }
  return true;
}

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) {
    fail(ErrorKind::LengthMismatch, "with_values: expected " + std::to_string(values_.size()) +
                                        " samples, got " + std::to_string(values.size()));
  }
  return TimeSeries(subject_id_, phase_, modality_, timestamps_, std::move(values),
                    sample_rate_hz_);
}

std::string Violation::describe() const {
  if (index) return what + " at index " + std::to_string(*index);
  return what;
}

std::string ValidationResult::describe() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.describe();
  }
  return out;
}

ValidationResult validate_time_series(const TimeSeries& series) {
  ValidationResult r;
  auto t = series.timestamps();
  auto v = series.values();
  if (t.size() != v.size()) r.violations.push_back({"length mismatch", std::nullopt});
  if (std::min(t.size(), v.size()) < 2) r.violations.push_back({"fewer than 2 samples", std::nullopt});
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      r.violations.push_back({"non-finite timestamp", i});
      break;
    }
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      r.violations.push_back({"non-increasing", i});
      break;
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      r.violations.push_back({"non-finite value", i});
      break;
    }
  }
  if (!(series.sample_rate_hz() > 0.0) || !std::isfinite(series.sample_rate_hz())) {
    r.violations.push_back({"sample rate not positive", std::nullopt});
  }
  return r;
}

void require_valid(const TimeSeries& series) {
  auto r = validate_time_series(series);
  if (!r.ok()) {
    fail(ErrorKind::ValidationFailed, series.subject_id() + "/" + series.phase() + "/" +
                                          series.modality().name + ": " + r.describe());
  }
}

void SubjectBundle::add(TimeSeries series) {
  auto& list = entries_[series.subject_id()];
  for (const auto& existing : list) {
    if (existing.phase() == series.phase() && existing.modality() == series.modality()) {
      fail(ErrorKind::DuplicateEntry, "subject " + series.subject_id() + " already has phase '" +
                                          series.phase() + "' modality " +
                                          series.modality().name);
    }
  }
  list.push_back(std::move(series));
}

SubjectBundle SubjectBundle::merged(const SubjectBundle& other) const {
  SubjectBundle out = *this;
  for (const auto& [subject, list] : other.entries_) {
    if (out.entries_.count(subject)) {
      fail(ErrorKind::DuplicateEntry, "subject " + subject + " present in both bundles");
    }
    out.entries_[subject] = list;
  }
  return out;
}

std::size_t SubjectBundle::series_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, list] : entries_) n += list.size();
  return n;
}

const TimeSeries* SubjectBundle::find(const std::string& subject, const std::string& phase,
                                      const std::string& modality) const {
  auto it = entries_.find(subject);
  if (it == entries_.end()) return nullptr;
  const std::string name = canonical_modality_name(modality);
  for (const auto& s : it->second) {
    if (s.phase() == phase && s.modality().name == name) return &s;
  }
  return nullptr;
}

std::vector<std::string> SubjectBundle::phases_of(const std::string& subject) const {
  std::vector<std::string> out;
  auto it = entries_.find(subject);
  if (it == entries_.end()) return out;
  for (const auto& s : it->second) {
    if (std::find(out.begin(), out.end(), s.phase()) == out.end()) out.push_back(s.phase());
  }
  return out;
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) fail(ErrorKind::InvalidArgument, "no feature column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

bool FeatureMatrix::column_is_categorical(std::size_t column) const {
  return std::any_of(rows.begin(), rows.end(),
                     [&](const FeatureRow& r) { return is_categorical(r.values.at(column)); });
}

bool FeatureMatrix::fully_numeric() const {
  return std::all_of(rows.begin(), rows.end(), [](const FeatureRow& r) {
    return std::all_of(r.values.begin(), r.values.end(), [](const FeatureValue& v) {
      return is_numeric(v);
    });
  });
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.columns = columns;
  out.rows.reserve(indices.size());
  for (auto i : indices) out.rows.push_back(rows.at(i));
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  for (auto c : indices) out.columns.push_back(columns.at(c));
  out.rows.reserve(rows.size());
  for (const auto& r : rows) {
    FeatureRow nr{r.subject_id, r.phase, r.window_index, {}};
    nr.values.reserve(indices.size());
    for (auto c : indices) nr.values.push_back(r.values.at(c));
    out.rows.push_back(std::move(nr));
  }
  return out;
}

ValidationResult validate_feature_matrix(const FeatureMatrix& matrix) {
  ValidationResult r;
  std::set<std::string> names;
  for (std::size_t c = 0; c < matrix.columns.size(); ++c) {
    if (!names.insert(matrix.columns[c]).second) {
      r.violations.push_back({"duplicate column '" + matrix.columns[c] + "'", c});
    }
  }
  std::set<std::tuple<std::string, std::string, std::size_t>> keys;
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    const auto& row = matrix.rows[i];
    if (row.values.size() != matrix.columns.size()) {
      r.violations.push_back({"row width differs from column count", i});
    }
    if (!keys.insert({row.subject_id, row.phase, row.window_index}).second) {
      r.violations.push_back({"duplicate (subject, phase, window) key", i});
    }
  }
  for (std::size_t c = 0; c < matrix.columns.size(); ++c) {
    bool num = false, cat = false;
    for (const auto& row : matrix.rows) {
      if (c >= row.values.size()) continue;
      num = num || is_numeric(row.values[c]);
      cat = cat || is_categorical(row.values[c]);
    }
    if (num && cat) r.violations.push_back({"column '" + matrix.columns[c] + "' mixes numeric and categorical", c});
  }
  return r;
}

LabelVector LabelVector::select(std::span<const std::size_t> indices) const {
  LabelVector out;
  out.class_names = class_names;
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels.at(i));
  return out;
}

ValidationResult validate_labels(const LabelVector& labels, const FeatureMatrix& matrix) {
  ValidationResult r;
  if (labels.labels.size() != matrix.rows.size()) {
    r.violations.push_back({"label count differs from row count", std::nullopt});
  }
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (!labels.class_names.count(labels.labels[i])) {
      r.violations.push_back({"label without class name", i});
      break;
    }
  }
  return r;
}

std::vector<DroppedRow> drop_incomplete_rows(LabeledFeatures& data) {
  std::vector<DroppedRow> dropped;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.matrix.rows.size(); ++i) {
    const auto& row = data.matrix.rows[i];
    auto bad = std::find_if(row.values.begin(), row.values.end(),
                            [](const FeatureValue& v) { return is_absent(v); });
    if (bad == row.values.end()) {
      keep.push_back(i);
    } else {
      auto col = static_cast<std::size_t>(bad - row.values.begin());
      dropped.push_back({row.subject_id, row.phase, row.window_index,
                         "absent value in column '" + data.matrix.columns[col] + "'"});
    }
  }
  if (!dropped.empty()) {
    data.matrix = data.matrix.select_rows(keep);
    data.labels = data.labels.select(keep);
  }
  return dropped;
}

}  // namespace affectflow
