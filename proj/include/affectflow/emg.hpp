#pragma once

#include <span>
#include <vector>

#include "affectflow/statistics.hpp"

namespace affectflow {

struct EmgOptions {
  double highpass_hz = 10.0;
  double lowpass_hz = 50.0;
  double subwindow_s = 5.0;
  int band_count = 10;
  double band_max_hz = 350.0;
};

struct EmgPeakFeatures {
  double count = 0, mean_amplitude = 0, std_amplitude = 0, max_amplitude = 0;
};

/// Group A: subwindow-averaged statistics and band energies of the high-passed trace.
/// Group B: statistics and peak summary of the low-passed trace.
struct EmgFeatures {
  StatisticalFeatures highpassed;
  std::vector<double> band_energy;
  StatisticalFeatures lowpassed;
  EmgPeakFeatures peaks;
};

/// Mean Hann-periodogram energy per equal-width band over [0, band_max_hz],
/// averaged over consecutive subwindows. Throws SampleRateTooLow when fs < 2 * band_max_hz.
std::vector<double> emg_band_energies(std::span<const double> highpassed, double fs_hz,
                                      const EmgOptions& options = {});

/// Statistical features averaged over consecutive options.subwindow_s blocks.
StatisticalFeatures emg_subwindow_statistics(std::span<const double> x, double fs_hz,
                                             const EmgOptions& options = {});

/// Local maxima of the low-passed trace above its mean + one standard deviation.
EmgPeakFeatures emg_peak_features(std::span<const double> lowpassed);

/// Both feature groups from a raw EMG window.
EmgFeatures emg_features(std::span<const double> raw, double fs_hz, const EmgOptions& options = {});

}  // namespace affectflow
