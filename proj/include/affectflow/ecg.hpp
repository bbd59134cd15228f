#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "affectflow/data_model.hpp"
#include "affectflow/spectral.hpp"

namespace affectflow {

/// Inter-beat intervals; rr_s[i] = beat_times_s[i + 1] - beat_times_s[i].
struct RRSeries {
  std::vector<double> rr_s;
  std::vector<double> beat_times_s;

  /// Throws InvalidArgument unless beat times are strictly increasing.
  static RRSeries from_beat_times(std::vector<double> beat_times_s);
};

struct RPeakOptions {
  double band_lo_hz = 5.0;
  double band_hi_hz = 15.0;
  double integration_window_s = 0.150;
  double refractory_s = 0.25;
};

/// Pan-Tompkins-style detector: 5-15 Hz band-pass, derivative, squaring,
/// 150 ms moving-window integration, adaptive signal/noise thresholds with
/// search-back, then R localization on the band-passed trace.
/// Throws NoBeatsDetected when fewer than two beats are found.
std::vector<std::size_t> detect_r_peaks(const TimeSeries& ecg, const RPeakOptions& options = {});

struct HrvTimeFeatures {
  double hr_mean_bpm = 0, hr_std_bpm = 0;
  double rmssd_s = 0, sdnn_s = 0;
  double rr_mean_s = 0, rr_median_s = 0, rr_std_s = 0, rr_var_s2 = 0;
};

/// Throws TooFewBeats when fewer than 3 intervals are available.
HrvTimeFeatures hrv_time_features(const RRSeries& rr);

struct HrvBand {
  std::string name;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

/// ULF 0.01-0.04, LF 0.04-0.15, HF 0.15-0.4, UHF 0.4-1.0 Hz.
std::vector<HrvBand> default_hrv_bands();

struct HrvFreqOptions {
  double tachogram_hz = 4.0;
  double segment_s = 64.0;
  /// Minimum first-to-last beat span.
  double min_span_s = 60.0;
};

/// Cubic-spline tachogram at options.tachogram_hz, then Welch PSD.
Spectrum rr_spectrum(const RRSeries& rr, const HrvFreqOptions& options = {});

/// Band powers (s^2) without the LF/HF ratio; never throws on flat spectra.
std::map<std::string, double> hrv_band_powers(const RRSeries& rr, std::span<const HrvBand> bands,
                                              const HrvFreqOptions& options = {});

struct HrvFreqFeatures {
  std::map<std::string, double> band_power;
  double lf_hf_ratio = 0.0;
};

/// Band powers plus LF/HF. `bands` must contain "LF" and "HF". Throws
/// TooFewBeats when the beats span less than options.min_span_s, and
/// DegenerateSpectrum when the HF power is zero.
HrvFreqFeatures hrv_freq_features(const RRSeries& rr, std::span<const HrvBand> bands,
                                  const HrvFreqOptions& options = {});

/// Natural cubic spline through (x, y), evaluated at `at` (clamped to [x0, xn]).
std::vector<double> natural_cubic_spline(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> at);

}  // namespace affectflow
