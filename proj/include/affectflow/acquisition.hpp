#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "affectflow/data_model.hpp"

namespace affectflow {

/// Registered modalities. Lookups are case-insensitive.
class SignalRegistry {
 public:
  /// ECG, EDA, EMG, RESP and TEMP.
  static SignalRegistry builtin();

  /// Built-in registry extended by a metadata file of `name,unit,default_sample_rate_hz`
  /// records. Blank lines and lines starting with '#' are ignored; the rate may be
  /// empty or "unspecified".
  static SignalRegistry from_file(const std::filesystem::path& path);

  /// Throws DuplicateEntry on a name clash.
  void add(Modality modality);

  const Modality* find(std::string_view name) const;
  const Modality& at(std::string_view name) const;  // throws UnknownModality
  std::vector<Modality> modalities() const;

 private:
  std::map<std::string, Modality> by_name_;
};

struct IndexedFile {
  std::string phase;
  Modality modality;
  std::filesystem::path path;
};

struct SkippedFile {
  std::filesystem::path path;
  std::string reason;
};

struct DatasetIndex {
  std::filesystem::path root;
  std::map<std::string, std::vector<IndexedFile>> subjects;
  /// `{subject}/{subject}_reports.csv` self-report files, when present.
  std::map<std::string, std::filesystem::path> report_files;
  std::vector<SkippedFile> skipped;

  std::size_t file_count() const;
};

/// `{root}/{subject}/{subject}_{phase}_{modality}.csv`
std::filesystem::path signal_file_path(const std::filesystem::path& root, const std::string& subject,
                                       const std::string& phase, const std::string& modality);

std::filesystem::path report_file_path(const std::filesystem::path& root, const std::string& subject);

/// Indexes a dataset folder. Unmatched names and unregistered modalities are
/// reported in `skipped`; a duplicate (phase, modality) is a DuplicateEntry error.
DatasetIndex scan_dataset(const std::filesystem::path& root, const SignalRegistry& registry);

TimeSeries parse_csv_signal(std::string_view text, const Modality& modality,
                            const std::string& subject, const std::string& phase);

TimeSeries load_csv_signal(const std::filesystem::path& path, const Modality& modality,
                           const std::string& subject, const std::string& phase);

std::string format_csv_signal(const TimeSeries& series);
void write_csv_signal(const TimeSeries& series, const std::filesystem::path& path);

/// Writes every series of `bundle` under `root` in the dataset layout.
void write_bundle(const SubjectBundle& bundle, const std::filesystem::path& root);

struct AcquisitionOptions {
  /// Escalate subject exclusion to an ExcludedSubject error.
  bool strict = false;
};

struct ExclusionRecord {
  std::string subject;
  std::vector<std::string> missing;  // "phase/MODALITY"
};

struct AcquisitionResult {
  SubjectBundle bundle;
  std::vector<ExclusionRecord> excluded;
};

/// Loads the requested modalities. A subject lacking any requested modality in
/// any phase seen in the dataset is excluded and reported.
AcquisitionResult acquire(const DatasetIndex& index, std::span<const Modality> signal_types,
                          const AcquisitionOptions& options = {});

}  // namespace affectflow
