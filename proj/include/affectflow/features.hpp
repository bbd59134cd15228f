#pragma once

#include <any>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "affectflow/data_model.hpp"
#include "affectflow/ecg.hpp"
#include "affectflow/eda.hpp"
#include "affectflow/emg.hpp"
#include "affectflow/windowing.hpp"

namespace affectflow {

struct ExtractionSettings {
  double scr_min_amplitude_us = 0.01;
  double eda_tonic_cutoff_hz = 0.05;
  std::vector<HrvBand> hrv_bands = default_hrv_bands();
  HrvFreqOptions hrv_freq;
  /// Inside a window the beats can never span the full window length, so the
  /// frequency-domain span requirement is this fraction of the window.
  double hrv_min_span_fraction = 0.9;
  RPeakOptions r_peaks;
  EmgOptions emg;
};

class SignalContext;

/// Computes one cell for one window of one series. Throwing affectflow::Error
/// marks the cell absent.
using FeatureFn = std::function<FeatureValue(SignalContext&, const WindowSpan&)>;

struct FeatureCatalogEntry {
  std::string name;         // output column
  std::string modality;     // canonical modality name
  std::string computation;  // built-in feature id, or "custom"
  std::map<std::string, double> parameters;
  FeatureFn compute;
};

/// Full-series state shared by every feature of one (subject, phase, modality):
/// R-peaks, EDA decomposition, SCR events and filtered EMG traces are computed
/// once and sliced per window.
class SignalContext {
 public:
  SignalContext(const TimeSeries& series, const ExtractionSettings& settings);
  ~SignalContext();
  SignalContext(const SignalContext&) = delete;
  SignalContext& operator=(const SignalContext&) = delete;

  const TimeSeries& series() const noexcept { return series_; }
  const ExtractionSettings& settings() const noexcept { return settings_; }

  std::span<const double> window_values(const WindowSpan& w) const;
  TimeSeries window_series(const WindowSpan& w) const;

  /// R-peak sample indices over the whole series.
  const std::vector<std::size_t>& r_peaks();
  /// Intervals between the beats whose R-peaks fall inside the window.
  RRSeries window_rr(const WindowSpan& w);
  const HrvTimeFeatures& hrv_time(const WindowSpan& w);
  /// Throws TooFewBeats when the window's beats span less than
  /// hrv_min_span_fraction of the window.
  const Spectrum& rr_spectrum(const WindowSpan& w);

  std::span<const double> tonic();
  std::span<const double> phasic();
  const std::vector<SCREvent>& scr_events(double min_amplitude_us);
  SCRSummary window_scr(const WindowSpan& w, double min_amplitude_us);

  std::span<const double> emg_highpassed();
  std::span<const double> emg_lowpassed();

  /// Per-window memo for multi-output computations, keyed by name. A thrown
  /// Error is memoized too and rethrown on every later lookup.
  template <class T, class F>
  const T& memo(const std::string& key, const WindowSpan& w, F&& compute) {
    return std::any_cast<const T&>(memo_any(key, w.index, [&] { return std::any(T(compute())); }));
  }

 private:
  const std::any& memo_any(const std::string& key, std::size_t window, const std::function<std::any()>& compute);

  struct Caches;
  const TimeSeries& series_;
  const ExtractionSettings& settings_;
  std::unique_ptr<Caches> caches_;
};

/// Built-in feature ids in catalog order, grouped by modality.
std::vector<std::string> builtin_feature_ids();

/// Throws UnknownFeature. Parameters override settings for this entry only
/// (e.g. "min_amplitude_us" for SCR features, "lo_hz"/"hi_hz" for HRV bands).
FeatureCatalogEntry builtin_feature(const std::string& id, std::map<std::string, double> parameters = {},
                                    std::string column_name = {});

FeatureCatalogEntry custom_feature(std::string name, std::string modality,
                                   std::function<FeatureValue(const TimeSeries& window)> fn);

/// "stress-ecg-eda": 14 ECG+EDA features (10 ECG, 4 EDA).
/// "chest": every built-in feature for ECG, EDA, EMG, RESP and TEMP.
std::vector<FeatureCatalogEntry> feature_preset(const std::string& name);
std::vector<std::string> feature_preset_names();

struct ExtractionConfig {
  WindowingPolicy default_policy;
  std::map<std::string, WindowingPolicy> per_modality;
  bool calculate_average = true;
  ExtractionSettings settings;
};

struct ExtractionIssue {
  std::string subject_id;
  std::string phase;
  std::string feature;
  std::string message;
  std::size_t windows = 0;  // how many windows failed this way
};

struct ExtractionResult {
  FeatureMatrix matrix;
  std::vector<ExtractionIssue> issues;
};

/// Segments every catalog modality of every subject-phase, computes the
/// catalog per window and fuses the modalities by column concatenation in
/// catalog order. With calculate_average, each (subject, phase) collapses to
/// one row (window_index 0) of per-feature means over the windows where the
/// feature was present. Failed cells are absent and listed in `issues`.
ExtractionResult extract_features(const SubjectBundle& bundle, std::span<const FeatureCatalogEntry> catalog,
                                  const ExtractionConfig& config);

}  // namespace affectflow
